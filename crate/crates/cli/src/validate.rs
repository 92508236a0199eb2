//! Oracle cross-check suites behind `vartn validate`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use vartn::fock::{annihilation, plbo_unitary_matrix, transformed_ladder, PRODUCT_PAD};
use vartn::gaussian::random_pure_covariance;
use vartn::lbo::{plan_optimal_basis, truncation_bound_check};
use vartn::linalg::{c, kron, max_abs_diff, top_left, CMat, CVec, C64};
use vartn::mpo::{apply_basis, build_hamiltonian, full_hamiltonian_mpo, Mpo};
use vartn::mps::dmrg::dmrg;
use vartn::mps::{from_dense, from_dense_exact, normalized_fidelity};
use vartn::oracle::{dense_ground, dense_hamiltonian, dense_spectrum};
use vartn::plbo::{plbo_mpo, site_gradient};
use vartn::{Basis, BasisParams, CovarianceState, DimChoice, DmrgOptions, HamiltonianSpec, Mps};

use crate::config::{Fault, ValidateLevel, ValidateOptions};
use crate::error::CliResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = (bool, String);
type Suite<'a> = (&'static str, Box<dyn Fn() -> CliResult<Check> + 'a>);

/// `ε_D` is evaluated as `1 − ‖kept‖²`, so it cannot resolve weights below round-off.
const EPS_D_FLOOR: f64 = 1e-14;

/// Runs every suite; a suite error counts as a failure of that suite.
pub fn run_suites(opts: &ValidateOptions) -> Vec<SuiteResult> {
    let full = opts.level == ValidateLevel::Full;
    let suites: [Suite<'_>; 7] = [
        ("mpo_equivalence", Box::new(move || mpo_equivalence(full, opts.fault))),
        ("spectrum_interlacing", Box::new(move || spectrum_interlacing(full))),
        ("truncation_bound", Box::new(move || truncation_bound(full))),
        ("fidelity_bound", Box::new(move || fidelity_bound(full))),
        ("compression_surrogate", Box::new(move || compression_surrogate(full))),
        ("ladder_consistency", Box::new(move || ladder_consistency(full))),
        ("gradient_check", Box::new(move || gradient_check(full))),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
            SuiteResult { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn random_mean(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..2 * n).map(|_| rng.random_range(-0.4..0.4)).collect()
}

/// Perturbs one element of the first core.
fn corrupt(mut mpo: Mpo) -> Mpo {
    if let Some(entry) = mpo.cores[0].entries.first_mut() {
        entry.op[(0, 0)] += c(1e-3);
    }
    mpo
}

fn mpo_equivalence(full: bool, fault: Option<Fault>) -> CliResult<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let count = if full { 20 } else { 6 };
    let mut worst = 0.0f64;
    for k in 0..count {
        let n = [2, 3][k % 2];
        let d = [3, 4, 5][k % 3];
        let kappa = [0.0, 0.1, 0.3][(k / 2) % 3];
        let st = random_pure_covariance(n, 0.5, 1000 + k as u64).with_mean(random_mean(n, &mut rng))?;
        let spec = HamiltonianSpec::new(st, kappa)?;
        let dims = vec![d; n];
        let mut mpo = full_hamiltonian_mpo(&spec, &apply_basis(&spec, &Basis::Fock, &dims)?);
        if k == 0 && fault == Some(Fault::CorruptMpoCore) {
            mpo = corrupt(mpo);
        }
        worst = worst.max(max_abs_diff(&mpo.to_dense(), &dense_hamiltonian(&spec, &dims)?.matrix));
    }
    Ok((worst < 1e-8, format!("max-abs {worst:.2e} over {count} instances")))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn spectrum_interlacing(full: bool) -> CliResult<Check> {
    let mut ok = true;
    for (n, d) in [(2usize, 5usize), (3, 4)] {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(n))?;
        let spectrum = dense_spectrum(&dense_hamiltonian(&spec, &vec![d; n])?);
        ok &= spectrum.iter().all(|x| (x - x.round()).abs() < 1e-10);
        for m in 0..d {
            let count = spectrum.iter().filter(|x| (*x - m as f64).abs() < 1e-9).count();
            ok &= count == binomial(m + n - 1, n - 1);
        }
    }
    let mut worst = f64::INFINITY;
    let count = if full { 5 } else { 2 };
    for seed in 0..count {
        let spec = HamiltonianSpec::new(random_pure_covariance(2, 0.4, 200 + seed), [0.0, 0.2][seed as usize % 2])?;
        for d in 3..=if full { 7 } else { 5 } {
            let lo = dense_spectrum(&dense_hamiltonian(&spec, &[d - 1, d - 1])?);
            let hi = dense_spectrum(&dense_hamiltonian(&spec, &[d, d])?);
            worst = lo.iter().zip(&hi).map(|(a, b)| a - b).fold(worst, f64::min);
        }
    }
    ok &= worst >= -1e-10;
    Ok((ok, format!("vacuum spectra harmonic; min λ_k(D-1)-λ_k(D) = {worst:.2e} over {count} instances")))
}

fn truncation_bound(full: bool) -> CliResult<Check> {
    let n = if full { 4 } else { 2 };
    let mut ok = true;
    let mut points = 0;
    for seed in 0..if full { 3 } else { 2 } {
        let st = random_pure_covariance(n, 0.35, 400 + seed);
        for d in 1..=if full { 6 } else { 4 } {
            let chk = truncation_bound_check(&st, &plan_optimal_basis(&st, &DimChoice::Uniform(d))?)?;
            points += 1;
            ok &= chk.eps <= chk.eps_d * (1.0 + 1e-9) && chk.eps_d <= n as f64 * chk.eps * (1.0 + 1e-9) + EPS_D_FLOOR;
        }
    }
    Ok((ok, format!("eps <= eps_D <= N eps on {points} points (N={n})")))
}

fn fidelity_bound(full: bool) -> CliResult<Check> {
    let (mut combos, mut violations) = (0, 0);
    let mut min_slack = f64::INFINITY;
    let instances = if full { 12 } else { 3 };
    let ds: &[usize] = if full { &[3, 4, 5] } else { &[4] };
    for inst in 0..instances {
        let n = if inst % 3 == 0 { 2 } else { 3 };
        let kappa = if inst % 4 == 3 { 0.2 } else { 0.0 };
        let spec = HamiltonianSpec::new(random_pure_covariance(n, 0.6, 300 + inst), kappa)?;
        for &d in ds {
            let dims = vec![d; n];
            let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims)?;
            let (_, g) = dense_ground(&dense_hamiltonian(&spec, &dims)?);
            let exact = from_dense_exact(&g.amplitudes, &dims);
            for chi in 1..=4usize {
                let out = dmrg(&mpo, &DmrgOptions { chi_max: chi, seed: inst * 7 + chi as u64, ..Default::default() })?;
                if !out.converged || out.energy >= 1.0 {
                    continue;
                }
                combos += 1;
                let slack = normalized_fidelity(&out.mps, &exact) - (1.0 - out.energy);
                min_slack = min_slack.min(slack);
                violations += usize::from(slack < -1e-9);
            }
        }
    }
    Ok((combos > 0 && violations == 0, format!("{combos} combinations, {violations} violations, min F-(1-<H>) = {min_slack:.2e}")))
}

fn compression_surrogate(full: bool) -> CliResult<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let count = if full { 50 } else { 10 };
    let mut worst = f64::NEG_INFINITY;
    for k in 0..count {
        let v = CVec::from_fn(64, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let v = &v / c(v.norm());
        let (m, rep) = from_dense(&v, &[4, 4, 4], 1 + k % 3)?;
        worst = worst.max((&v - m.to_dense()).norm_squared() - rep.eps_chi_surrogate);
    }
    Ok((worst <= 1e-12, format!("max(actual - surrogate) = {worst:.2e} over {count} states")))
}

fn ladder_consistency(full: bool) -> CliResult<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(707);
    let tau = std::f64::consts::TAU;
    let count = if full { 20 } else { 5 };
    let mut worst = 0.0f64;
    for _ in 0..count {
        let p = BasisParams {
            alpha_x: rng.random_range(-0.1..0.1),
            alpha_p: rng.random_range(-0.1..0.1),
            r: rng.random_range(-0.1..0.1),
            phi: rng.random_range(0.0..tau),
            theta: rng.random_range(0.0..tau),
            s: rng.random_range(-0.1..0.1),
            gamma: rng.random_range(-0.03..0.03),
            kappa: rng.random_range(-0.1..0.1),
        };
        let big = 24;
        let u = plbo_unitary_matrix(&p, big, big, PRODUCT_PAD);
        let want = top_left(&(u.adjoint() * annihilation(big) * &u), 8, 8);
        worst = worst.max(max_abs_diff(&transformed_ladder(&p, 8).data, &want));
    }
    Ok((worst < 1e-6, format!("max-abs {worst:.1e} over {count} draws")))
}

/// `⟨ψ|U† H U|ψ⟩/⟨ψ|ψ⟩` with both sites lifted to the large dense space.
fn lifted_energy(params: &[BasisParams], psi: &CVec, d: usize, big: usize, h: &CMat) -> f64 {
    let u = kron(&plbo_unitary_matrix(&params[0], big, d, big), &plbo_unitary_matrix(&params[1], big, d, big));
    let lifted = u * psi;
    lifted.dotc(&(h * &lifted)).re / psi.norm_squared()
}

fn gradient_check(full: bool) -> CliResult<Check> {
    let (d, big) = (6, if full { 30 } else { 24 });
    let instances = if full { 3 } else { 1 };
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let spec = HamiltonianSpec::new(random_pure_covariance(2, 0.3, 1000 + inst as u64), [0.0, 0.2, 0.3][inst])?;
        let h = dense_hamiltonian(&spec, &[big, big])?.matrix;
        let params = vec![
            BasisParams { alpha_x: 0.1, alpha_p: -0.05, r: 0.08, phi: 0.4, theta: 0.3, s: 0.05, gamma: 0.02, kappa: 0.03 },
            BasisParams { alpha_x: -0.07, alpha_p: 0.02, r: -0.05, phi: 1.2, theta: -0.6, s: -0.04, gamma: -0.01, kappa: 0.01 },
        ];
        let mpo = plbo_mpo(&spec, &params, &[d, d])?;
        let mut mps: Mps = dmrg(&mpo, &DmrgOptions { chi_max: 6, seed: inst as u64, ..Default::default() })?.mps;
        for site in 0..2 {
            mps.canonicalize(site);
            let g = site_gradient(&spec, &params, &mps, site, 1e-5)?;
            let psi = mps.to_dense();
            let step = 1e-4;
            let dense: Vec<f64> = (0..8)
                .map(|j| {
                    let shifted = |sign: f64| {
                        let mut p = params.clone();
                        let mut a = p[site].to_array();
                        a[j] += sign * step;
                        p[site] = BasisParams::from_array(a);
                        lifted_energy(&p, &psi, d, big, &h)
                    };
                    (shifted(1.0) - shifted(-1.0)) / (2.0 * step)
                })
                .collect();
            let norm = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
            let tol = (1e-5f64).max(1e-3 * norm);
            let dev = g.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            worst = worst.max(dev / tol);
        }
    }
    Ok((worst <= 1.0, format!("worst deviation / tolerance = {worst:.2e} over {} site gradients", 2 * instances)))
}
