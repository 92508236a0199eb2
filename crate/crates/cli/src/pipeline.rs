//! The `gbs`, `nongauss` and `sample` pipelines.

use std::time::Instant;

use rayon::prelude::*;

use vartn::fock::plbo_unitary_matrix;
use vartn::gaussian::{reduced_covariance, split_noise};
use vartn::lbo::{inverse_basis_matrices, plan_optimal_basis, truncation_bound_check, LocalBasisPlan};
use vartn::linalg::CMat;
use vartn::mpo::{build_hamiltonian, Mpo};
use vartn::mps::dmrg::{dmrg, energy_report, DmrgOutcome};
use vartn::mps::{flat, Mps};
use vartn::mps::lanczos::{lowest_eigenpair, LanczosOptions};
use vartn::oracle::{dense_hamiltonian_capped, gaussian_pure_amplitudes};
use vartn::plbo::run_plbo;
use vartn::sampling::{noisy_sample_with, SampleBatch};
use vartn::{BasisParams, CovarianceState, DmrgOptions, HamiltonianSpec, PlboConfig};

use crate::config::{BasisKind, Config, OracleOptions};
use crate::error::{CliError, CliResult};
use crate::report::{AmplitudeRow, InstanceReport, ModeReport, OracleReport, PlboSummary, SamplingSummary, SimulationReport};

/// Bond cap of the `H²` contraction behind the variance.
const VARIANCE_CAP: usize = 4096;
const PURITY_TOL: f64 = 1e-8;

/// Result of one instance: its report and the normalized state in the Fock basis.
pub struct InstanceRun {
    pub report: InstanceReport,
    pub fock_mps: Mps,
    pub seconds: f64,
}

/// Pipeline of a pure instance: basis plan, MPO, ground-state search, amplitudes, oracle.
pub fn run_instance(cfg: &Config, state: CovarianceState, kappa: f64, index: usize) -> CliResult<InstanceRun> {
    let start = Instant::now();
    if !state.is_pure(PURITY_TOL) {
        return Err(CliError::Config("the sampling Hamiltonian needs a pure state; use `sample` for mixed states".into()));
    }
    let n = state.n_modes();
    let seed = cfg.seed.wrapping_add(index as u64);
    let dmrg_opts = DmrgOptions { seed, ..cfg.dmrg };
    let spec = HamiltonianSpec::new(state.clone(), kappa)?;
    let nbar = reduced_occupations(&state)?;

    let mut plbo = None;
    let mut eps_basis = None;
    let mut eps_d = None;
    let solved = match cfg.basis {
        BasisKind::Fock => {
            let dims = cfg.fixed_dims(n)?;
            let mpo = build_hamiltonian(&spec, &vartn::Basis::Fock, &dims)?;
            Solved::from_dmrg(dmrg(&mpo, &dmrg_opts)?, &mpo, dims.clone(), dims.clone(), Lift::Fock(dims))
        }
        BasisKind::Olb => {
            let plan = plan_optimal_basis(&state, &cfg.dims)?;
            let mpo = build_hamiltonian(&spec, &plan.basis(), &plan.dims())?;
            eps_basis = Some(plan.eps);
            if cfg.oracle.enabled && kappa == 0.0 {
                eps_d = Some(truncation_bound_check(&state, &plan)?.eps_d);
            }
            Solved::from_dmrg(dmrg(&mpo, &dmrg_opts)?, &mpo, plan.dims(), plan.effective_cutoffs(), Lift::Olb(plan))
        }
        BasisKind::Plbo => {
            let dims = cfg.fixed_dims(n)?;
            let pcfg = PlboConfig { seed, dmrg: DmrgOptions { seed, ..cfg.plbo.dmrg }, ..cfg.plbo };
            let res = run_plbo(&spec, &dims, &pcfg)?;
            plbo = Some(PlboSummary {
                params: res.params.clone(),
                phase1_energy: res.phase1_energy,
                fock_energy: res.fock_energy,
                phase2_energy: res.phase2_energy,
                fell_back: res.fell_back,
            });
            Solved {
                energy: res.report.energy,
                variance: Some(res.report.variance).filter(|v| v.is_finite()),
                converged: res.converged,
                sweeps: None,
                eps_chi: None,
                mps: res.mps,
                lift: Lift::Plbo(res.params, dims.clone()),
                dims,
                cutoffs: res.effective_cutoffs,
            }
        }
    };
    let Solved { mps, dims, cutoffs, energy, variance, converged, sweeps, eps_chi, lift } = solved;

    let d_out = cfg.amplitudes.cutoff.unwrap_or(0).max(cutoffs.iter().copied().max().unwrap_or(1));
    let mut fock_mps = mps.apply_site_matrices(&lift.matrices(d_out)?)?;
    fock_mps.normalize();
    let amplitude_cutoffs = fock_mps.phys_dims();
    let amplitudes = fock_mps
        .amplitudes_upto(cfg.amplitudes.max_total)
        .into_iter()
        .map(|(occupation, a)| AmplitudeRow { occupation, re: a.re, im: a.im, prob: a.norm_sqr() })
        .collect();

    let oracle = if cfg.oracle.enabled { oracle_check(&spec, &fock_mps, &amplitude_cutoffs, &cfg.oracle)? } else { None };
    if cfg.basis != BasisKind::Olb {
        eps_d = eps_d.or(oracle.as_ref().and_then(|(_, outside)| *outside));
    }
    let oracle = oracle.map(|(report, _)| report);

    let modes = (0..n).map(|i| ModeReport { nbar: nbar[i], d: dims[i], effective_cutoff: cutoffs[i] }).collect();
    let report = InstanceReport {
        index,
        n_modes: n,
        kappa,
        basis: cfg.basis,
        dims,
        energy,
        variance,
        sigma_h: variance.map(|v| v.max(0.0).sqrt()),
        converged,
        sweeps,
        eps_chi,
        eps_basis,
        eps_d,
        bond_dims: mps.bond_dims(),
        modes,
        amplitude_cutoffs,
        amplitudes,
        oracle,
        plbo,
    };
    Ok(InstanceRun { report, fock_mps, seconds: start.elapsed().as_secs_f64() })
}

/// Map from the site basis back to Fock levels.
enum Lift {
    Fock(Vec<usize>),
    Olb(LocalBasisPlan),
    Plbo(Vec<BasisParams>, Vec<usize>),
}

impl Lift {
    /// One `d_out × d_i` isometry per site.
    fn matrices(&self, d_out: usize) -> CliResult<Vec<CMat>> {
        Ok(match self {
            Lift::Fock(dims) => dims.iter().map(|&d| fock_embedding(d_out, d)).collect(),
            Lift::Olb(plan) => inverse_basis_matrices(plan, d_out)?,
            Lift::Plbo(params, dims) => params.iter().zip(dims).map(|(p, &d)| plbo_unitary_matrix(p, d_out, d, d_out.max(16))).collect(),
        })
    }
}

struct Solved {
    mps: Mps,
    dims: Vec<usize>,
    cutoffs: Vec<usize>,
    energy: f64,
    variance: Option<f64>,
    converged: bool,
    sweeps: Option<usize>,
    eps_chi: Option<f64>,
    lift: Lift,
}

impl Solved {
    fn from_dmrg(out: DmrgOutcome, mpo: &Mpo, dims: Vec<usize>, cutoffs: Vec<usize>, lift: Lift) -> Self {
        let variance = energy_report(&out.mps, mpo, VARIANCE_CAP).ok().map(|r| r.variance);
        Solved {
            energy: out.energy,
            variance,
            converged: out.converged,
            sweeps: Some(out.sweeps),
            eps_chi: Some(out.max_discarded),
            mps: out.mps,
            dims,
            cutoffs,
            lift,
        }
    }
}

/// `d_out × d` embedding of the first `d` Fock levels.
fn fock_embedding(d_out: usize, d: usize) -> CMat {
    CMat::identity(d_out.max(d), d)
}

/// `n̄_i = √det V_i − 1/2` of every reduced single-mode state.
fn reduced_occupations(state: &CovarianceState) -> CliResult<Vec<f64>> {
    (0..state.n_modes())
        .map(|i| Ok((reduced_covariance(state, i)?.determinant().max(0.0).sqrt() - 0.5).max(0.0)))
        .collect()
}

/// Fidelity of the Fock-basis state against an oracle, plus the target weight outside the cutoffs.
///
/// Gaussian targets with zero means use the exact amplitude series; everything else the
/// lowest eigenvector of the densely built truncated Hamiltonian. `None` when over the caps.
fn oracle_check(spec: &HamiltonianSpec, fock_mps: &Mps, dims: &[usize], opts: &OracleOptions) -> CliResult<Option<(OracleReport, Option<f64>)>> {
    let total: usize = dims.iter().product();
    let zero_mean = spec.state.mean().iter().all(|&m| m == 0.0);
    let series = spec.kappa == 0.0 && zero_mean;
    if total > if series { opts.dim_cap } else { opts.dense_cap } {
        return Ok(None);
    }
    let psi = fock_mps.to_dense();
    let (target, method, dense_energy, outside) = if series {
        let t = gaussian_pure_amplitudes(&spec.state, dims)?;
        let w = t.norm_sqr();
        (t.amplitudes, "gaussian_series", None, Some((1.0 - w).max(0.0)))
    } else {
        let h = dense_hamiltonian_capped(spec, dims, opts.dense_cap)?.matrix;
        let lopts = LanczosOptions { tol: 1e-12, max_iter: 2000, krylov: 64 };
        let ground = lowest_eigenpair(|v| &h * v, &psi, lopts);
        (ground.vector, "dense_ground", Some(ground.value), None)
    };
    let fidelity = target.dotc(&psi).norm_sqr() / (target.norm_squared() * psi.norm_squared());
    Ok(Some((OracleReport { method: method.into(), fidelity, one_minus_fidelity: 1.0 - fidelity, dense_energy }, outside)))
}

fn non_converged(instances: &[InstanceReport]) -> Option<String> {
    let bad: Vec<String> = instances.iter().filter(|r| !r.converged).map(|r| r.index.to_string()).collect();
    (!bad.is_empty()).then(|| format!("instances {} did not reach the energy tolerance", bad.join(", ")))
}

/// Runs the configured instances in parallel, ordered by index.
fn run_batch(command: &str, cfg: &Config, kappa: f64) -> CliResult<(SimulationReport, Vec<Mps>)> {
    let start = Instant::now();
    let runs: Vec<InstanceRun> = (0..cfg.instances)
        .into_par_iter()
        .map(|k| run_instance(cfg, cfg.instance_state(k)?, kappa, k))
        .collect::<CliResult<_>>()?;
    let mut report = SimulationReport::new(command, cfg);
    report.timing.instance_s = runs.iter().map(|r| r.seconds).collect();
    let mut states = Vec::with_capacity(runs.len());
    for run in runs {
        report.instances.push(run.report);
        states.push(run.fock_mps);
    }
    report.timing.total_s = start.elapsed().as_secs_f64();
    Ok((report, states))
}

/// Outcome of a pipeline command: the report plus an optional convergence failure.
pub struct RunOutput {
    pub report: SimulationReport,
    pub batch: Option<SampleBatch>,
    pub unconverged: Option<String>,
}

pub fn cmd_gbs(cfg: &Config) -> CliResult<RunOutput> {
    if cfg.kappa != 0.0 {
        return Err(CliError::Config("gbs runs need kappa = 0; use nongauss".into()));
    }
    let (report, _) = run_batch("gbs", cfg, 0.0)?;
    let unconverged = non_converged(&report.instances);
    Ok(RunOutput { report, batch: None, unconverged })
}

pub fn cmd_nongauss(cfg: &Config) -> CliResult<RunOutput> {
    let (report, _) = run_batch("nongauss", cfg, cfg.kappa)?;
    let unconverged = non_converged(&report.instances);
    Ok(RunOutput { report, batch: None, unconverged })
}

/// Splits the mixed state, solves for its pure part, then samples with classical displacements.
pub fn cmd_sample(cfg: &Config) -> CliResult<RunOutput> {
    let start = Instant::now();
    let opts = cfg.sampling.ok_or_else(|| CliError::Config("sample needs a sampling section".into()))?;
    if cfg.kappa != 0.0 {
        return Err(CliError::Config("noisy sampling is defined for Gaussian states only (kappa = 0)".into()));
    }
    if cfg.instances != 1 {
        return Err(CliError::Config("sample runs a single instance".into()));
    }
    let mixed = cfg.instance_state(0)?;
    let split = split_noise(&mixed)?;
    let run = run_instance(cfg, split.q, 0.0, 0)?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let batch = noisy_sample_with(&split.c, &run.fock_mps, opts.count, seed)?;

    let cutoffs = run.fock_mps.phys_dims();
    let n = cutoffs.len();
    let count = batch.samples.len().max(1) as f64;
    let mean_photons = (0..n).map(|i| batch.samples.iter().map(|s| s[i] as f64).sum::<f64>() / count).collect();
    let mean_leaked_weight = batch.leaked_weight.iter().sum::<f64>() / count;
    let max_leaked_weight = batch.leaked_weight.iter().copied().fold(0.0, f64::max);
    debug_assert!(batch.samples.iter().all(|s| flat(s, &cutoffs) < cutoffs.iter().product()));

    let mut report = SimulationReport::new("sample", cfg);
    report.sampling = Some(SamplingSummary { count: opts.count, seed, cutoffs, mean_photons, mean_leaked_weight, max_leaked_weight });
    report.timing.instance_s = vec![run.seconds];
    report.instances.push(run.report);
    report.timing.total_s = start.elapsed().as_secs_f64();
    let unconverged = non_converged(&report.instances);
    Ok(RunOutput { report, batch: Some(batch), unconverged })
}
