//! Parameterized local basis optimization.
//!
//! Each site carries gate parameters of a single-mode unitary. Sweeps
//! alternate a gradient step on one site's parameters, with the rest of
//! the state frozen, and a one-site eigen-update in the new basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{effective_cutoff, BasisParams, QuadratureSet};
use crate::lbo::{CUTOFF_SEARCH_MAX, CUTOFF_TOL};
use crate::linalg::{CMat, C64};
use crate::mpo::{apply_basis, full_hamiltonian_mpo, Basis, HamiltonianSpec, Mpo, MpoCore, MpoEntry};
use crate::mps::dmrg::{
    dmrg, dmrg_from, energy_report, site_environments, site_solve, DmrgOptions, EnergyReport,
    VARIANCE_BOND_CAP,
};
use crate::mps::lanczos::LanczosOptions;
use crate::mps::Mps;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlboConfig {
    pub fd_step: f64,
    pub learn_rate: f64,
    pub moment_decays: (f64, f64),
    pub steps_per_site: usize,
    pub sweeps: usize,
    pub warmup_chi: usize,
    pub final_chi: usize,
    pub seed: u64,
    pub dmrg: DmrgOptions,
}

impl Default for PlboConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            learn_rate: 1e-2,
            moment_decays: (0.9, 0.999),
            steps_per_site: 10,
            sweeps: 12,
            warmup_chi: 8,
            final_chi: 16,
            seed: 0,
            dmrg: DmrgOptions::default(),
        }
    }
}

impl PlboConfig {
    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.moment_decays;
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(Error::InvalidInput(format!("fd_step {} outside (0, 1e-2]", self.fd_step)));
        }
        if !(b1 > 0.0 && b1 < 1.0 && b2 > 0.0 && b2 < 1.0) {
            return Err(Error::InvalidInput("moment decays must lie in (0, 1)".into()));
        }
        if !(self.learn_rate > 0.0 && self.learn_rate.is_finite()) {
            return Err(Error::InvalidInput("learn_rate must be positive".into()));
        }
        if self.warmup_chi == 0 || self.final_chi == 0 {
            return Err(Error::InvalidInput("bond dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PlboResult {
    pub params: Vec<BasisParams>,
    pub mps: Mps,
    pub report: EnergyReport,
    pub effective_cutoffs: Vec<usize>,
    /// Fock-basis DMRG energy at the warm-up bond dimension.
    pub phase1_energy: f64,
    /// Fock-basis DMRG energy at the final bond dimension.
    pub fock_energy: f64,
    /// Energy after the last basis-optimization sweep.
    pub phase2_energy: f64,
    /// The learned basis did not improve on the Fock basis.
    pub fell_back: bool,
    pub converged: bool,
}

/// Hamiltonian MPO for the given per-site parameters.
pub fn plbo_mpo(spec: &HamiltonianSpec, params: &[BasisParams], dims: &[usize]) -> Result<Mpo> {
    let local = apply_basis(spec, &Basis::Plbo(params.to_vec()), dims)?;
    Ok(full_hamiltonian_mpo(spec, &local))
}

/// The Hamiltonian core of one site as a linear function of its local
/// operators `(1, X, P, X², P², XP+PX)`, found by probing the builder.
struct LinearSiteCore {
    dl: usize,
    dr: usize,
    links: Vec<(usize, usize)>,
    coef: Vec<[C64; 6]>,
}

fn probe_set(k: usize) -> QuadratureSet {
    let one = |j: usize| CMat::from_element(1, 1, if j == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    QuadratureSet { x: one(1), p: one(2), x2: one(3), p2: one(4), xp: one(5) }
}

fn local_ops(q: &QuadratureSet) -> [CMat; 6] {
    let d = q.dim();
    [CMat::identity(d, d), q.x.clone(), q.p.clone(), q.x2.clone(), q.p2.clone(), q.xp.clone()]
}

impl LinearSiteCore {
    fn probe(spec: &HamiltonianSpec, local: &[QuadratureSet], site: usize) -> Self {
        let mut probes = Vec::with_capacity(6);
        for k in 0..6 {
            let mut l = local.to_vec();
            l[site] = probe_set(k);
            probes.push(full_hamiltonian_mpo(spec, &l).cores.swap_remove(site));
        }
        let base = &probes[0];
        let links: Vec<(usize, usize)> = base.entries.iter().map(|e| (e.left, e.right)).collect();
        let coef = (0..links.len())
            .map(|j| {
                let c0 = base.entries[j].op[(0, 0)];
                let mut row = [c0; 6];
                for k in 1..6 {
                    debug_assert_eq!((probes[k].entries[j].left, probes[k].entries[j].right), links[j]);
                    row[k] = probes[k].entries[j].op[(0, 0)] - c0;
                }
                row
            })
            .collect();
        Self { dl: base.dl, dr: base.dr, links, coef }
    }

    fn core(&self, q: &QuadratureSet) -> MpoCore {
        let ops = local_ops(q);
        let d = q.dim();
        let entries = self
            .links
            .iter()
            .zip(&self.coef)
            .map(|(&(left, right), cf)| {
                let mut op = CMat::zeros(d, d);
                for (o, &w) in ops.iter().zip(cf) {
                    if w != C64::new(0.0, 0.0) {
                        op += o * w;
                    }
                }
                MpoEntry { left, right, op }
            })
            .collect();
        MpoCore { dl: self.dl, dr: self.dr, d_out: d, d_in: d, entries }
    }

    /// `M_k[s', s] = Σ_e c_{e,k} ⟨θ_{s'}| L θ_s R⟩ / ⟨θ|θ⟩`, so `E = Σ_k ⟨M_k, O_k⟩`.
    fn reduced(&self, left: &[CMat], right: &[CMat], theta: &[CMat]) -> [CMat; 6] {
        let d = theta.len();
        let norm: f64 = theta.iter().map(|a| a.norm_squared()).sum();
        let mut out: [CMat; 6] = std::array::from_fn(|_| CMat::zeros(d, d));
        for (&(wl, wr), cf) in self.links.iter().zip(&self.coef) {
            let y: Vec<CMat> = theta.iter().map(|t| &left[wl] * t * &right[wr]).collect();
            let g = CMat::from_fn(d, d, |so, si| theta[so].dotc(&y[si]) / norm);
            for (m, &w) in out.iter_mut().zip(cf) {
                if w != C64::new(0.0, 0.0) {
                    *m += &g * w;
                }
            }
        }
        out
    }
}

/// Site energy as a function of one site's parameters, other sites frozen.
struct SiteObjective {
    lin: LinearSiteCore,
    dim: usize,
    site: usize,
    left: Vec<CMat>,
    right: Vec<CMat>,
    theta: Vec<CMat>,
    reduced: [CMat; 6],
}

impl SiteObjective {
    fn new(spec: &HamiltonianSpec, params: &[BasisParams], mps: &Mps, site: usize) -> Result<Self> {
        let dims = mps.phys_dims();
        let local = apply_basis(spec, &Basis::Plbo(params.to_vec()), &dims)?;
        let mpo = full_hamiltonian_mpo(spec, &local);
        let (left, right) = site_environments(mps, &mpo, site);
        let lin = LinearSiteCore::probe(spec, &local, site);
        let theta = mps.cores[site].clone();
        let reduced = lin.reduced(&left, &right, &theta);
        Ok(Self { lin, dim: dims[site], site, left, right, theta, reduced })
    }

    fn set_theta(&mut self, theta: Vec<CMat>) {
        self.reduced = self.lin.reduced(&self.left, &self.right, &theta);
        self.theta = theta;
    }

    fn core_with(&self, p: &BasisParams) -> MpoCore {
        self.lin.core(&QuadratureSet::plbo(p, self.dim))
    }

    fn energy(&self, p: &BasisParams) -> f64 {
        let ops = local_ops(&QuadratureSet::plbo(p, self.dim));
        let mut e = C64::new(0.0, 0.0);
        for (m, o) in self.reduced.iter().zip(&ops) {
            e += m.zip_fold(o, C64::new(0.0, 0.0), |acc, a, b| acc + a * b);
        }
        e.re
    }

    fn gradient(&self, p: &BasisParams, fd_step: f64) -> [f64; 8] {
        let x = p.to_array();
        let mut g = [0.0; 8];
        for j in 0..8 {
            let h = fd_step * x[j].abs().max(1.0);
            let (mut up, mut dn) = (x, x);
            up[j] += h;
            dn[j] -= h;
            g[j] = (self.energy(&BasisParams::from_array(up)) - self.energy(&BasisParams::from_array(dn))) / (2.0 * h);
        }
        g
    }
}

/// `⟨ψ|H(params)|ψ⟩ / ⟨ψ|ψ⟩` evaluated through the environments of `site`.
pub fn site_energy(spec: &HamiltonianSpec, params: &[BasisParams], mps: &Mps, site: usize) -> Result<f64> {
    if site >= mps.n_sites() {
        return Err(Error::IndexOutOfRange { index: site, len: mps.n_sites() });
    }
    let obj = SiteObjective::new(spec, params, mps, site)?;
    Ok(obj.energy(&params[site]))
}

/// Finite-difference gradient of the site energy with respect to the site's 8 parameters.
pub fn site_gradient(spec: &HamiltonianSpec, params: &[BasisParams], mps: &Mps, site: usize, fd_step: f64) -> Result<[f64; 8]> {
    let obj = SiteObjective::new(spec, params, mps, site)?;
    Ok(obj.gradient(&params[site], fd_step))
}

/// Regularizer of the adaptive step; gradients far below it (pure gauge
/// directions such as an initial Kerr phase) barely move their parameter.
const ADAM_EPS: f64 = 1e-8;

/// First and second moment accumulators of one site, kept across sweeps.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    m: [f64; 8],
    v: [f64; 8],
    t: i32,
}

/// Adaptive-moment steps on `obj.site`. With `lanczos` set, the site tensor is
/// re-solved after every step so the objective is the local ground energy.
fn adam_steps(
    obj: &mut SiteObjective,
    start: &BasisParams,
    cfg: &PlboConfig,
    mom: &mut Moments,
    lanczos: Option<LanczosOptions>,
) -> BasisParams {
    let (b1, b2) = cfg.moment_decays;
    let mut x = start.to_array();
    let mut best = (obj.energy(start), *start, obj.theta.clone());
    let Moments { m, v, t } = mom;
    for _ in 0..cfg.steps_per_site {
        *t += 1;
        let g = obj.gradient(&BasisParams::from_array(x), cfg.fd_step);
        if g.iter().any(|z| !z.is_finite()) {
            log::warn!("non-finite basis gradient at site {}; keeping previous parameters", obj.site);
            break;
        }
        for j in 0..8 {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let mh = m[j] / (1.0 - b1.powi(*t));
            let vh = v[j] / (1.0 - b2.powi(*t));
            x[j] -= cfg.learn_rate * mh / (vh.sqrt() + ADAM_EPS);
        }
        let p = BasisParams::from_array(x);
        if !p.is_finite() {
            break;
        }
        if let Some(lopts) = lanczos {
            let (theta, _) = site_solve(&obj.left, &obj.right, &obj.core_with(&p), &obj.theta, lopts);
            obj.set_theta(theta);
        }
        let e = obj.energy(&p);
        if e < best.0 {
            best = (e, p, obj.theta.clone());
        }
    }
    if lanczos.is_some() {
        obj.set_theta(best.2);
    }
    best.1
}

/// Adaptive-moment steps on one site's parameters; never raises the site energy.
pub fn optimize_site(spec: &HamiltonianSpec, params: &[BasisParams], mps: &Mps, site: usize, cfg: &PlboConfig) -> Result<BasisParams> {
    let mut obj = SiteObjective::new(spec, params, mps, site)?;
    Ok(adam_steps(&mut obj, &params[site], cfg, &mut Moments::default(), None))
}

fn sweep_order(n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.extend((0..n.saturating_sub(1)).rev());
    order
}

/// Fock-basis warm-up, alternating basis/state sweeps, then DMRG in the learned basis.
pub fn run_plbo(spec: &HamiltonianSpec, dims: &[usize], cfg: &PlboConfig) -> Result<PlboResult> {
    cfg.validate()?;
    let n = spec.n_modes();
    let zero = vec![BasisParams::default(); n];
    let fock = plbo_mpo(spec, &zero, dims)?;
    let warm_opts = DmrgOptions { chi_max: cfg.warmup_chi, seed: cfg.seed, ..cfg.dmrg };
    let final_opts = DmrgOptions { chi_max: cfg.final_chi, seed: cfg.seed, ..cfg.dmrg };
    let phase1 = dmrg(&fock, &warm_opts)?;
    let baseline = if cfg.final_chi == cfg.warmup_chi { phase1.clone() } else { dmrg_from(&fock, phase1.mps.clone(), &final_opts)? };

    let mut params = zero.clone();
    let mut mps = phase1.mps.clone();
    // inner solves between basis steps are warm-started and kept short
    let lopts = LanczosOptions { tol: cfg.dmrg.eig_tol, max_iter: cfg.dmrg.krylov.min(20), krylov: cfg.dmrg.krylov.min(20) };
    let mut phase2_energy = phase1.energy;
    let mut moments = vec![Moments::default(); n];
    for _ in 0..cfg.sweeps {
        for site in sweep_order(n) {
            mps.canonicalize(site);
            let mut obj = SiteObjective::new(spec, &params, &mps, site)?;
            // start from the local ground state of the current basis
            let theta = site_solve(&obj.left, &obj.right, &obj.core_with(&params[site]), &obj.theta, lopts).0;
            obj.set_theta(theta);
            params[site] = adam_steps(&mut obj, &params[site], cfg, &mut moments[site], Some(lopts));
            mps.cores[site] = obj.theta;
        }
        mps.canonicalize(0);
        mps.normalize();
        let e = energy_report_energy(spec, &params, &mps)?;
        let stalled = (phase2_energy - e).abs() < cfg.dmrg.tol_energy;
        phase2_energy = e;
        if stalled {
            break;
        }
    }

    let learned = plbo_mpo(spec, &params, dims)?;
    let phase3 = dmrg_from(&learned, mps, &final_opts)?;
    let (params, mps, energy_mpo, converged, fell_back) = if phase3.energy <= baseline.energy + 1e-9 {
        (params, phase3.mps, learned, phase3.converged, false)
    } else {
        (zero, baseline.mps.clone(), fock, baseline.converged, true)
    };
    let report = match energy_report(&mps, &energy_mpo, VARIANCE_BOND_CAP) {
        Ok(r) => r,
        Err(Error::ResourceLimit(_)) => {
            let e = crate::mps::dmrg::expectation(&mps, &energy_mpo)?.re / mps.norm_sqr();
            EnergyReport { energy: e, variance: f64::NAN, sigma_h: f64::NAN }
        }
        Err(e) => return Err(e),
    };
    let effective_cutoffs = params
        .iter()
        .zip(dims)
        .map(|(p, &d)| effective_cutoff(p, d, CUTOFF_TOL, CUTOFF_SEARCH_MAX))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlboResult {
        params,
        mps,
        report,
        effective_cutoffs,
        phase1_energy: phase1.energy,
        fock_energy: baseline.energy,
        phase2_energy,
        fell_back,
        converged,
    })
}

fn energy_report_energy(spec: &HamiltonianSpec, params: &[BasisParams], mps: &Mps) -> Result<f64> {
    let mpo = plbo_mpo(spec, params, &mps.phys_dims())?;
    Ok(crate::mps::dmrg::expectation(mps, &mpo)?.re / mps.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::CovarianceState;

    #[test]
    fn zero_params_vacuum_energy_is_zero() {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(2)).unwrap();
        let mps = Mps::vacuum(&[4, 4]);
        let p = vec![BasisParams::default(); 2];
        assert!(site_energy(&spec, &p, &mps, 0).unwrap().abs() < 1e-12);
        let mut q = p.clone();
        q[1].alpha_x = 0.05;
        assert!(site_energy(&spec, &q, &mps, 1).unwrap() > 1e-4);
    }

    #[test]
    fn site_energy_matches_full_expectation() {
        let st = crate::gaussian::random_pure_covariance(3, 0.3, 4);
        let spec = HamiltonianSpec::new(st, 0.2).unwrap();
        let dims = [4, 5, 4];
        let params: Vec<BasisParams> = (0..3)
            .map(|i| BasisParams { r: 0.05 * i as f64, theta: 0.3, s: -0.04, alpha_x: 0.02, ..Default::default() })
            .collect();
        let mut mps = Mps::random(&dims, 4, 3);
        mps.canonicalize(1);
        let mpo = plbo_mpo(&spec, &params, &dims).unwrap();
        let full = crate::mps::dmrg::expectation(&mps, &mpo).unwrap().re;
        for site in 0..3 {
            mps.canonicalize(site);
            assert!((site_energy(&spec, &params, &mps, site).unwrap() - full).abs() < 1e-9);
        }
    }

    #[test]
    fn displaced_vacuum_is_learned() {
        let st = CovarianceState::vacuum(1).with_mean(vec![1.0, 0.0]).unwrap();
        let spec = HamiltonianSpec::gaussian(st).unwrap();
        let cfg = PlboConfig { steps_per_site: 40, sweeps: 40, warmup_chi: 1, final_chi: 1, learn_rate: 2e-2, ..Default::default() };
        let res = run_plbo(&spec, &[4], &cfg).unwrap();
        assert!(!res.fell_back);
        assert!(res.report.energy < 1e-6, "{}", res.report.energy);
        assert!(res.report.energy <= res.fock_energy);
        assert!(res.effective_cutoffs[0] > 4);
        // a single kept level pins the displacement uniquely
        let res = run_plbo(&spec, &[1], &cfg).unwrap();
        assert!(res.report.energy < 1e-6, "{}", res.report.energy);
        assert!((res.params[0].alpha_x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3, "{:?}", res.params[0]);
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(PlboConfig { fd_step: 0.1, ..Default::default() }.validate().is_err());
        assert!(PlboConfig { moment_decays: (1.0, 0.5), ..Default::default() }.validate().is_err());
    }
}
