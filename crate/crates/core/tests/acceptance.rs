//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use vartn::fock::{annihilation, plbo_unitary_matrix, transformed_ladder, Gate, PRODUCT_PAD};
use vartn::gaussian::{random_pure_covariance, split_noise, CovarianceState};
use vartn::lbo::{inverse_basis_matrices, plan_optimal_basis, truncation_bound_check};
use vartn::linalg::{c, max_abs_diff, top_left, CMat, CVec, RMat};
use vartn::mpo::{apply_basis, build_hamiltonian, full_hamiltonian_mpo};
use vartn::mps::dmrg::{dmrg, DmrgOptions};
use vartn::mps::{from_dense, from_dense_exact, normalized_fidelity};
use vartn::oracle::{dense_circuit, dense_ground, dense_hamiltonian, dense_spectrum, mixed_fock_distribution, CircuitOp};
use vartn::plbo::{plbo_mpo, run_plbo, site_gradient, PlboConfig};
use vartn::sampling::noisy_sample;
use vartn::{Basis, BasisParams, DimChoice, HamiltonianSpec, Mps};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.1} s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64()
    );
    o.pass
}

fn random_mean(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..2 * n).map(|_| rng.random_range(-0.4..0.4)).collect()
}

fn mpo_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let n = [2, 3][k % 2];
        let d = [3, 4, 5][k % 3];
        let kappa = [0.0, 0.1, 0.3][(k / 2) % 3];
        let st = random_pure_covariance(n, 0.5, 1000 + k as u64).with_mean(random_mean(n, &mut rng)).unwrap();
        let spec = HamiltonianSpec::new(st, kappa).unwrap();
        let dims = vec![d; n];
        let mpo = full_hamiltonian_mpo(&spec, &apply_basis(&spec, &Basis::Fock, &dims).unwrap());
        let dense = dense_hamiltonian(&spec, &dims).unwrap();
        worst = worst.max(max_abs_diff(&mpo.to_dense(), &dense.matrix));
    }
    let el = start.elapsed();
    Outcome { pass: worst < 1e-8 && el < Duration::from_secs(30), detail: format!("max-abs {worst:.2e} over 20 instances in {:.1} s", el.as_secs_f64()) }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn spectrum_and_interlacing() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (n, d) in [(2usize, 5usize), (3, 4)] {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(n)).unwrap();
        let spectrum = dense_spectrum(&dense_hamiltonian(&spec, &vec![d; n]).unwrap());
        let off = spectrum.iter().map(|x| (x - x.round()).abs()).fold(0.0f64, f64::max);
        for m in 0..d {
            let count = spectrum.iter().filter(|x| (*x - m as f64).abs() < 1e-9).count();
            ok &= count == binomial(m + n - 1, n - 1);
        }
        ok &= off < 1e-10;
        notes.push(format!("vacuum N={n} D={d} integer offset {off:.1e}"));
    }
    let mut worst = f64::INFINITY;
    for seed in 0..5u64 {
        let spec = HamiltonianSpec::new(random_pure_covariance(2, 0.4, 200 + seed), [0.0, 0.2][seed as usize % 2]).unwrap();
        for d in 3..=7 {
            let lo = dense_spectrum(&dense_hamiltonian(&spec, &[d - 1, d - 1]).unwrap());
            let hi = dense_spectrum(&dense_hamiltonian(&spec, &[d, d]).unwrap());
            for (a, b) in lo.iter().zip(&hi) {
                worst = worst.min(a - b);
            }
        }
    }
    ok &= worst >= -1e-10;
    notes.push(format!("min λ_k(D-1)-λ_k(D) = {worst:.2e}"));
    Outcome { pass: ok, detail: notes.join("; ") }
}

fn fidelity_bound() -> Outcome {
    let mut combos = 0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for inst in 0..12u64 {
        let n = if inst % 3 == 0 { 2 } else { 3 };
        let kappa = if inst % 4 == 3 { 0.2 } else { 0.0 };
        let spec = HamiltonianSpec::new(random_pure_covariance(n, 0.6, 300 + inst), kappa).unwrap();
        for d in [3, 4, 5] {
            let dims = vec![d; n];
            let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
            let (_, g) = dense_ground(&dense_hamiltonian(&spec, &dims).unwrap());
            let exact = from_dense_exact(&g.amplitudes, &dims);
            for chi in [1, 2, 3, 4] {
                let out = dmrg(&mpo, &DmrgOptions { chi_max: chi, seed: inst * 7 + chi as u64, ..Default::default() }).unwrap();
                if !out.converged || out.energy >= 1.0 {
                    continue;
                }
                combos += 1;
                let f = normalized_fidelity(&out.mps, &exact);
                let slack = f - (1.0 - out.energy);
                min_slack = min_slack.min(slack);
                if slack < -1e-9 {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: combos >= 100 && violations == 0,
        detail: format!("{combos} converged combinations, {violations} violations, min F-(1-<H>) = {min_slack:.2e}"),
    }
}

fn truncation_bound() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut points = 0;
    let mut notes = Vec::new();
    for seed in 0..3u64 {
        let st = random_pure_covariance(4, 0.35, 400 + seed);
        let mut last = None;
        for d in 1..=6 {
            let plan = plan_optimal_basis(&st, &DimChoice::Uniform(d)).unwrap();
            let chk = truncation_bound_check(&st, &plan).unwrap();
            points += 1;
            let within = chk.eps <= chk.eps_d * (1.0 + 1e-9) && chk.eps_d <= 4.0 * chk.eps * (1.0 + 1e-9);
            let ratio_ok = chk.ratio >= 0.25 - 1e-9 && chk.ratio <= 1.0 + 1e-9;
            ok &= within && ratio_ok;
            last = Some(chk);
        }
        let chk = last.unwrap();
        ok &= chk.eps < 1e-4 && chk.ratio < 0.5;
        notes.push(format!("eps={:.1e} ratio={:.3}", chk.eps, chk.ratio));
    }
    let el = start.elapsed();
    ok &= el < Duration::from_secs(120);
    Outcome { pass: ok, detail: format!("{points} points in bounds; smallest-eps points: {}", notes.join(", ")) }
}

fn compression_quasi_optimality() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..50 {
        let v = CVec::from_fn(64, |_, _| vartn::linalg::C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let v = &v / c(v.norm());
        let chi = 1 + k % 3;
        let (m, rep) = from_dense(&v, &[4, 4, 4], chi).unwrap();
        let err = (&v - m.to_dense()).norm_squared();
        worst = worst.max(err - rep.eps_chi_surrogate);
    }
    Outcome { pass: worst <= 1e-12, detail: format!("max(actual - surrogate) = {worst:.2e} over 50 states") }
}

fn rotation(theta: f64) -> [[f64; 2]; 2] {
    [[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]]
}

fn optimal_basis_exactness() -> Outcome {
    let mut worst_e = 0.0f64;
    let mut worst_a = 0.0f64;
    for (k, (r, th)) in [((0.3, 0.5), (0.6, -0.4)), ((0.8, 1.1), (0.2, 2.0)), ((0.5, 0.0), (0.7, 0.9))].into_iter().enumerate() {
        let base = CovarianceState::squeezed_product(&[r.0, th.0]);
        let mut rot = RMat::zeros(4, 4);
        for (i, t) in [r.1, th.1].into_iter().enumerate() {
            let m = rotation(t);
            rot[(i, i)] = m[0][0];
            rot[(i, 2 + i)] = m[0][1];
            rot[(2 + i, i)] = m[1][0];
            rot[(2 + i, 2 + i)] = m[1][1];
        }
        let st = base.transformed(&rot);
        let spec = HamiltonianSpec::gaussian(st).unwrap();
        let plan = plan_optimal_basis(&spec.state, &DimChoice::Uniform(1)).unwrap();
        let mpo = build_hamiltonian(&spec, &plan.basis(), &plan.dims()).unwrap();
        let out = dmrg(&mpo, &DmrgOptions { chi_max: 1, seed: k as u64, ..Default::default() }).unwrap();
        worst_e = worst_e.max(out.energy);
        let d_out = plan.effective_cutoffs().into_iter().max().unwrap();
        let fock = out.mps.apply_site_matrices(&inverse_basis_matrices(&plan, d_out).unwrap()).unwrap();
        let ops = vec![
            CircuitOp::Single { gate: Gate::Squeeze { r: r.0, phi: 0.0 }, mode: 0 },
            CircuitOp::Single { gate: Gate::Rotation { theta: r.1 }, mode: 0 },
            CircuitOp::Single { gate: Gate::Squeeze { r: th.0, phi: 0.0 }, mode: 1 },
            CircuitOp::Single { gate: Gate::Rotation { theta: th.1 }, mode: 1 },
        ];
        let oracle = dense_circuit(&ops, 2, d_out).unwrap();
        let got = fock.to_dense();
        let phase = oracle.amplitudes[0] / got[0];
        let phase = phase / phase.norm();
        let diff = (0..got.len()).map(|i| (got[i] * phase - oracle.amplitudes[i]).norm()).fold(0.0f64, f64::max);
        worst_a = worst_a.max(diff);
    }
    Outcome {
        pass: worst_e < 1e-8 && worst_a < 2e-6,
        detail: format!("max energy {worst_e:.1e}, max amplitude deviation {worst_a:.1e}"),
    }
}

fn ladder_consistency() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    let tau = std::f64::consts::TAU;
    for _ in 0..20 {
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
    Outcome { pass: worst < 1e-6, detail: format!("max-abs {worst:.1e} over 20 draws") }
}

fn plbo_dominance() -> Outcome {
    let d = 10;
    let dims = [d, d, d];
    let cfg = PlboConfig { warmup_chi: 10, final_chi: 10, ..Default::default() };
    let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let mut ok = true;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut top_cutoffs = Vec::new();
    let mut run = |spec: &HamiltonianSpec, top: bool| {
        let fock = dmrg(&build_hamiltonian(spec, &Basis::Fock, &dims).unwrap(), &DmrgOptions { chi_max: cfg.final_chi, seed: cfg.seed, ..cfg.dmrg }).unwrap();
        let res = run_plbo(spec, &dims, &cfg).unwrap();
        worst_gap = worst_gap.max(res.report.energy - fock.energy);
        ok &= res.report.energy <= fock.energy + 1e-9;
        if top {
            ok &= res.effective_cutoffs.iter().all(|&e| e > d);
            top_cutoffs.push(res.effective_cutoffs.clone());
        }
    };
    for &kappa in &grid {
        run(&HamiltonianSpec::new(CovarianceState::vacuum(3), kappa).unwrap(), kappa == grid[grid.len() - 1]);
    }
    for seed in 0..8u64 {
        run(&HamiltonianSpec::new(random_pure_covariance(3, 0.3, 800 + seed), grid[grid.len() - 1]).unwrap(), true);
    }
    Outcome {
        pass: ok,
        detail: format!("max E_plbo - E_fock = {worst_gap:.2e} over 14 instances; top-kappa cutoffs {top_cutoffs:?}"),
    }
}

fn chi_square_p(counts: &[f64], probs: &[f64], total: f64) -> f64 {
    let mut stat = 0.0;
    let mut bins = 0;
    let (mut rest_o, mut rest_e) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * total;
        if e >= 5.0 {
            stat += (o - e) * (o - e) / e;
            bins += 1;
        } else {
            rest_o += o;
            rest_e += e;
        }
    }
    if rest_e > 0.0 {
        stat += (rest_o - rest_e) * (rest_o - rest_e) / rest_e.max(1e-300);
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

fn noisy_sampling() -> Outcome {
    let count = 100_000;
    let mut ok = true;
    let mut notes = Vec::new();
    let two_mode = CovarianceState::two_mode_squeezed(0.4).with_loss(0, 0.8).with_loss(1, 0.9);
    let random = random_pure_covariance(2, 0.3, 909).with_loss(0, 0.85).with_loss(1, 0.85);
    let instances = vec![("thermal N=1", CovarianceState::thermal(&[0.25]), 6usize), ("lossy TMSV", two_mode, 6), ("lossy random", random, 5)];
    for (name, st, d) in instances {
        let n = st.n_modes();
        let dims = vec![d; n];
        let split = split_noise(&st).unwrap();
        let spec = HamiltonianSpec::gaussian(split.q.clone()).unwrap();
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
        let pure = dmrg(&mpo, &DmrgOptions { chi_max: d, seed: 1, ..Default::default() }).unwrap().mps;
        let batch = noisy_sample(&st, &pure, count, 42).unwrap();
        let again = noisy_sample(&st, &pure, count, 42).unwrap();
        let identical = serde_json::to_vec(&batch).unwrap() == serde_json::to_vec(&again).unwrap();
        let mut probs = mixed_fock_distribution(&st, &dims, 16).unwrap();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let mut counts = vec![0.0; probs.len()];
        for occ in &batch.samples {
            counts[vartn::mps::flat(occ, &dims)] += 1.0;
        }
        let p = chi_square_p(&counts, &probs, count as f64);
        ok &= identical && p > 0.001;
        notes.push(format!("{name}: p={p:.3} identical={identical}"));
    }
    Outcome { pass: ok, detail: notes.join("; ") }
}

fn dense_learned_energy(params: &[BasisParams], psi: &CVec, d: usize, big: usize, h: &CMat) -> f64 {
    let u0 = plbo_unitary_matrix(&params[0], big, d, big);
    let u1 = plbo_unitary_matrix(&params[1], big, d, big);
    let lifted = vartn::linalg::kron(&u0, &u1) * psi;
    (lifted.dotc(&(h * &lifted))).re / psi.norm_squared()
}

fn gradient_check() -> Outcome {
    let d = 6;
    let big = 30;
    let mut worst = 0.0f64;
    let mut ok = true;
    for inst in 0..3u64 {
        let spec = HamiltonianSpec::new(random_pure_covariance(2, 0.3, 1000 + inst), [0.0, 0.2, 0.3][inst as usize]).unwrap();
        let h = dense_hamiltonian(&spec, &[big, big]).unwrap().matrix;
        let params = vec![
            BasisParams { alpha_x: 0.1, alpha_p: -0.05, r: 0.08, phi: 0.4, theta: 0.3, s: 0.05, gamma: 0.02, kappa: 0.03 },
            BasisParams { alpha_x: -0.07, alpha_p: 0.02, r: -0.05, phi: 1.2, theta: -0.6, s: -0.04, gamma: -0.01, kappa: 0.01 },
        ];
        let mpo = plbo_mpo(&spec, &params, &[d, d]).unwrap();
        let mut mps: Mps = dmrg(&mpo, &DmrgOptions { chi_max: 6, seed: inst, ..Default::default() }).unwrap().mps;
        for site in 0..2 {
            mps.canonicalize(site);
            let g = site_gradient(&spec, &params, &mps, site, 1e-5).unwrap();
            let psi = mps.to_dense();
            let mut dense = [0.0; 8];
            for (j, slot) in dense.iter_mut().enumerate() {
                let step = 1e-4;
                let (mut up, mut dn) = (params.clone(), params.clone());
                let mut a = up[site].to_array();
                a[j] += step;
                up[site] = BasisParams::from_array(a);
                let mut b = dn[site].to_array();
                b[j] -= step;
                dn[site] = BasisParams::from_array(b);
                *slot = (dense_learned_energy(&up, &psi, d, big, &h) - dense_learned_energy(&dn, &psi, d, big, &h)) / (2.0 * step);
            }
            let norm = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
            let tol = (1e-5f64).max(1e-3 * norm);
            let dev = g.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            worst = worst.max(dev / tol);
            ok &= dev <= tol;
        }
    }
    Outcome { pass: ok, detail: format!("worst deviation / tolerance = {worst:.2e} over 6 site gradients") }
}

#[test]
fn acceptance() {
    let results = [
        report(1, "MPO matches dense Hamiltonian", mpo_oracle_equivalence),
        report(2, "harmonic spectrum and interlacing", spectrum_and_interlacing),
        report(3, "fidelity bound F >= 1 - <H>", fidelity_bound),
        report(4, "truncation bound eps <= eps_D <= N eps", truncation_bound),
        report(5, "SVD compression below surrogate", compression_quasi_optimality),
        report(6, "optimal basis exact for squeezed products", optimal_basis_exactness),
        report(7, "transformed ladder matches conjugation", ladder_consistency),
        report(8, "learned basis beats Fock basis", plbo_dominance),
        report(9, "noisy sampling matches mixed oracle", noisy_sampling),
        report(10, "basis gradients match dense oracle", gradient_check),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, &p)| !p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
