//! Environments, expectation values and DMRG ground-state search.

use serde::{Deserialize, Serialize};

use super::lanczos::{lowest_eigenpair, LanczosOptions};
use super::{kept_count, Mps};
use crate::error::{Error, Result};
use crate::linalg::{c, svd, CMat, CVec, C64, ZERO};
use crate::mpo::{Mpo, MpoCore};

/// Default cap on the bond dimension of `H|ψ⟩` used for variances.
pub const VARIANCE_BOND_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub variance: f64,
    pub sigma_h: f64,
}

/// MPO core with nonzero operator elements listed explicitly.
#[derive(Clone, Debug)]
struct SparseCore {
    d: usize,
    dr: usize,
    terms: Vec<(usize, usize, Vec<(usize, usize, C64)>)>,
}

impl SparseCore {
    fn from_core(core: &MpoCore) -> Self {
        let terms = core
            .entries
            .iter()
            .map(|e| {
                let mut nz = Vec::new();
                for so in 0..e.op.nrows() {
                    for si in 0..e.op.ncols() {
                        let v = e.op[(so, si)];
                        if v != ZERO {
                            nz.push((so, si, v));
                        }
                    }
                }
                (e.left, e.right, nz)
            })
            .filter(|t| !t.2.is_empty())
            .collect();
        Self { d: core.d_out, dr: core.dr, terms }
    }

    /// Merges two neighbouring cores into one over the fused index `s₁·d₂ + s₂`.
    fn merge(a: &MpoCore, b: &MpoCore) -> Self {
        let (sa, sb) = (Self::from_core(a), Self::from_core(b));
        let d2 = sb.d;
        let mut acc: std::collections::BTreeMap<(usize, usize), std::collections::BTreeMap<(usize, usize), C64>> =
            Default::default();
        for (wl, w, nz1) in &sa.terms {
            for (w2, wr, nz2) in &sb.terms {
                if w != w2 {
                    continue;
                }
                let slot = acc.entry((*wl, *wr)).or_default();
                for &(o1, i1, v1) in nz1 {
                    for &(o2, i2, v2) in nz2 {
                        *slot.entry((o1 * d2 + o2, i1 * d2 + i2)).or_insert(ZERO) += v1 * v2;
                    }
                }
            }
        }
        let terms = acc
            .into_iter()
            .map(|((wl, wr), m)| (wl, wr, m.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((o, i), v)| (o, i, v)).collect()))
            .collect();
        Self { d: sa.d * d2, dr: sb.dr, terms }
    }
}

/// `L'[wr] = Σ op[s',s] A_{s'}† L[wl] A_s`.
fn grow_left(env: &[CMat], site: &[CMat], core: &SparseCore) -> Vec<CMat> {
    let dr = site[0].ncols();
    let mut out = vec![CMat::zeros(dr, dr); core.dr];
    let mut cache: Vec<Option<Vec<CMat>>> = vec![None; env.len()];
    for (wl, wr, nz) in &core.terms {
        let la = cache[*wl].get_or_insert_with(|| site.iter().map(|a| &env[*wl] * a).collect());
        for &(so, si, v) in nz {
            out[*wr] += site[so].adjoint() * &la[si] * v;
        }
    }
    out
}

/// `R'[wl] = Σ op[s',s] A_s R[wr] A_{s'}†`.
fn grow_right(env: &[CMat], site: &[CMat], core: &SparseCore, dl_mpo: usize) -> Vec<CMat> {
    let dl = site[0].nrows();
    let mut out = vec![CMat::zeros(dl, dl); dl_mpo];
    let mut cache: Vec<Option<Vec<CMat>>> = vec![None; env.len()];
    for (wl, wr, nz) in &core.terms {
        let ar = cache[*wr].get_or_insert_with(|| site.iter().map(|a| a * &env[*wr]).collect());
        for &(so, si, v) in nz {
            out[*wl] += &ar[si] * site[so].adjoint() * v;
        }
    }
    out
}

/// `(Hθ)_{s'} = Σ op[s',s] L[wl] θ_s R[wr]`.
fn apply_local(left: &[CMat], right: &[CMat], core: &SparseCore, theta: &[CMat]) -> Vec<CMat> {
    let (dl, dr) = theta[0].shape();
    let mut out = vec![CMat::zeros(dl, dr); core.d];
    let mut cache: Vec<Option<Vec<CMat>>> = vec![None; left.len()];
    let mut z = vec![CMat::zeros(dl, dr); core.d];
    for (wl, wr, nz) in &core.terms {
        let lt = cache[*wl].get_or_insert_with(|| theta.iter().map(|t| &left[*wl] * t).collect());
        for m in z.iter_mut() {
            m.fill(ZERO);
        }
        let mut touched = vec![false; core.d];
        for &(so, si, v) in nz {
            z[so].zip_apply(&lt[si], |a, b| *a += b * v);
            touched[so] = true;
        }
        for so in 0..core.d {
            if touched[so] {
                out[so] += &z[so] * &right[*wr];
            }
        }
    }
    out
}

fn flatten(theta: &[CMat]) -> CVec {
    let (dl, dr) = theta[0].shape();
    let mut v = CVec::zeros(theta.len() * dl * dr);
    for (s, a) in theta.iter().enumerate() {
        for col in 0..dr {
            for r in 0..dl {
                v[s * dl * dr + col * dl + r] = a[(r, col)];
            }
        }
    }
    v
}

fn unflatten(v: &CVec, d: usize, dl: usize, dr: usize) -> Vec<CMat> {
    (0..d).map(|s| CMat::from_column_slice(dl, dr, &v.as_slice()[s * dl * dr..(s + 1) * dl * dr])).collect()
}

fn check_dims(mps: &Mps, mpo: &Mpo) -> Result<()> {
    if mps.phys_dims() != mpo.phys_dims() {
        return Err(Error::ShapeMismatch(format!("mps dims {:?} vs mpo dims {:?}", mps.phys_dims(), mpo.phys_dims())));
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩` (not divided by the norm).
pub fn expectation(mps: &Mps, mpo: &Mpo) -> Result<C64> {
    check_dims(mps, mpo)?;
    let mut env = vec![CMat::identity(1, 1)];
    for (site, core) in mps.cores.iter().zip(&mpo.cores) {
        env = grow_left(&env, site, &SparseCore::from_core(core));
    }
    Ok(env[0][(0, 0)])
}

/// Exact `H|ψ⟩` as an MPS with multiplied bonds.
pub fn apply_mpo(mps: &Mps, mpo: &Mpo, bond_cap: usize) -> Result<Mps> {
    check_dims(mps, mpo)?;
    let mut cores = Vec::with_capacity(mps.n_sites());
    for (site, core) in mps.cores.iter().zip(&mpo.cores) {
        let (dl, dr) = site[0].shape();
        let (nl, nr) = (core.dl * dl, core.dr * dr);
        if nl.max(nr) > bond_cap {
            return Err(Error::ResourceLimit(format!("H|ψ⟩ bond {} exceeds cap {bond_cap}", nl.max(nr))));
        }
        let mut out = vec![CMat::zeros(nl, nr); core.d_out];
        for e in &core.entries {
            for so in 0..core.d_out {
                for si in 0..core.d_in {
                    let v = e.op[(so, si)];
                    if v != ZERO {
                        let mut blk = out[so].view_mut((e.left * dl, e.right * dr), (dl, dr));
                        blk += &site[si] * v;
                    }
                }
            }
        }
        cores.push(out);
    }
    Ok(Mps { cores, center: None })
}

/// Energy, variance and standard deviation of `H` in the (normalized) state.
pub fn energy_report(mps: &Mps, mpo: &Mpo, bond_cap: usize) -> Result<EnergyReport> {
    let norm2 = mps.norm_sqr();
    let e = expectation(mps, mpo)?;
    let energy = e.re / norm2;
    let h2 = apply_mpo(mps, mpo, bond_cap)?.norm_sqr() / norm2;
    let variance = (h2 - energy * energy).max(0.0);
    Ok(EnergyReport { energy, variance, sigma_h: variance.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DmrgMode {
    OneSite,
    #[default]
    TwoSite,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmrgOptions {
    pub mode: DmrgMode,
    pub chi_max: usize,
    pub max_sweeps: usize,
    pub tol_energy: f64,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub krylov: usize,
    /// Relative singular-value cutoff for two-site truncation.
    pub svd_cutoff: f64,
    pub seed: u64,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        Self {
            mode: DmrgMode::TwoSite,
            chi_max: 16,
            max_sweeps: 30,
            tol_energy: 1e-11,
            eig_tol: 1e-9,
            eig_max_iter: 200,
            krylov: 32,
            svd_cutoff: 1e-14,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DmrgOutcome {
    pub mps: Mps,
    /// `⟨H⟩` of the returned normalized state.
    pub energy: f64,
    /// Energy after every full sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    /// Sweep-to-sweep energy change fell below the tolerance.
    pub converged: bool,
    /// Largest discarded weight in the last sweep.
    pub max_discarded: f64,
}

struct Envs {
    left: Vec<Vec<CMat>>,
    right: Vec<Vec<CMat>>,
}

impl Envs {
    fn build(mps: &Mps, cores: &[SparseCore], mpo: &Mpo) -> Self {
        let n = mps.n_sites();
        let mut left = vec![Vec::new(); n + 1];
        let mut right = vec![Vec::new(); n + 1];
        left[0] = vec![CMat::identity(1, 1)];
        right[n] = vec![CMat::identity(1, 1)];
        for i in (1..n).rev() {
            right[i] = grow_right(&right[i + 1], &mps.cores[i], &cores[i], mpo.cores[i].dl);
        }
        Self { left, right }
    }
}

/// Ground-state search from a random seeded initial state.
pub fn dmrg(mpo: &Mpo, opts: &DmrgOptions) -> Result<DmrgOutcome> {
    mpo.validate()?;
    let dims = mpo.phys_dims();
    let init_chi = match opts.mode {
        DmrgMode::TwoSite => opts.chi_max.clamp(1, 4),
        DmrgMode::OneSite => opts.chi_max.min(2),
    };
    let start = Mps::random(&dims, init_chi, opts.seed);
    dmrg_from(mpo, start, opts)
}

/// Ground-state search warm-started from `start`.
pub fn dmrg_from(mpo: &Mpo, mut start: Mps, opts: &DmrgOptions) -> Result<DmrgOutcome> {
    check_dims(&start, mpo)?;
    if start.norm_sqr() <= 0.0 || !start.norm_sqr().is_finite() {
        return Err(Error::InvalidInput("initial state has zero norm".into()));
    }
    start.canonicalize(0);
    start.normalize();
    let cores: Vec<SparseCore> = mpo.cores.iter().map(SparseCore::from_core).collect();
    if start.n_sites() == 1 {
        return single_site_exact(mpo, start, &cores, opts);
    }
    match opts.mode {
        DmrgMode::TwoSite => two_site(mpo, start, &cores, opts),
        DmrgMode::OneSite => one_site(mpo, start, &cores, opts),
    }
}

fn lanczos_opts(opts: &DmrgOptions, max_iter: usize) -> LanczosOptions {
    LanczosOptions { tol: opts.eig_tol, max_iter, krylov: opts.krylov }
}

fn single_site_exact(mpo: &Mpo, mut mps: Mps, cores: &[SparseCore], opts: &DmrgOptions) -> Result<DmrgOutcome> {
    let one = vec![CMat::identity(1, 1)];
    let theta = &mps.cores[0];
    let d = theta.len();
    let res = lowest_eigenpair(
        |v| flatten(&apply_local(&one, &one, &cores[0], &unflatten(v, d, 1, 1))),
        &flatten(theta),
        lanczos_opts(opts, opts.eig_max_iter.max(4 * d)),
    );
    mps.cores[0] = unflatten(&res.vector, d, 1, 1);
    mps.center = Some(0);
    let energy = expectation(&mps, mpo)?.re;
    Ok(DmrgOutcome { mps, energy, trace: vec![energy], sweeps: 1, converged: res.converged, max_discarded: 0.0 })
}

/// Splits a two-site tensor; returns `(left, right, discarded weight)`.
fn split_two(theta: &[CMat], d1: usize, d2: usize, chi: usize, cutoff: f64, center_left: bool) -> (Vec<CMat>, Vec<CMat>, f64) {
    let (dl, dr) = theta[0].shape();
    let m = CMat::from_fn(d1 * dl, d2 * dr, |row, col| {
        let (s1, l) = (row / dl, row % dl);
        let (s2, r) = (col / dr, col % dr);
        theta[s1 * d2 + s2][(l, r)]
    });
    let (u, s, vt) = svd(&m);
    let keep = kept_count(&s, chi, cutoff);
    let total: f64 = s.iter().map(|x| x * x).sum();
    let disc: f64 = s[keep..].iter().map(|x| x * x).sum::<f64>() / total.max(f64::MIN_POSITIVE);
    let sv = CVec::from_iterator(keep, s[..keep].iter().map(|&x| c(x)));
    let mut u = u.columns(0, keep).into_owned();
    let mut vt = vt.rows(0, keep).into_owned();
    if center_left {
        for j in 0..keep {
            u.column_mut(j).scale_mut(sv[j].re);
        }
    } else {
        for j in 0..keep {
            vt.row_mut(j).scale_mut(sv[j].re);
        }
    }
    (super::unstack_rows(&u, d1), super::unstack_cols(&vt, d2), disc)
}

fn merge_sites(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn two_site(mpo: &Mpo, mut mps: Mps, cores: &[SparseCore], opts: &DmrgOptions) -> Result<DmrgOutcome> {
    let n = mps.n_sites();
    let merged: Vec<SparseCore> = (0..n - 1).map(|i| SparseCore::merge(&mpo.cores[i], &mpo.cores[i + 1])).collect();
    let mut envs = Envs::build(&mps, cores, mpo);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut max_disc = 0.0;
    let mut sweeps = 0;
    let lopts = lanczos_opts(opts, opts.eig_max_iter);
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        max_disc = 0.0f64;
        let mut last = f64::INFINITY;
        // left to right
        for i in 0..n - 1 {
            let (d1, d2) = (mps.cores[i].len(), mps.cores[i + 1].len());
            let theta = merge_sites(&mps.cores[i], &mps.cores[i + 1]);
            let (dl, dr) = theta[0].shape();
            let (le, re) = (&envs.left[i], &envs.right[i + 2]);
            let res = lowest_eigenpair(|v| flatten(&apply_local(le, re, &merged[i], &unflatten(v, d1 * d2, dl, dr))), &flatten(&theta), lopts);
            last = res.value;
            let (a, b, disc) = split_two(&unflatten(&res.vector, d1 * d2, dl, dr), d1, d2, opts.chi_max, opts.svd_cutoff, false);
            if disc > max_disc {
                max_disc = disc;
            }
            mps.cores[i] = a;
            mps.cores[i + 1] = b;
            envs.left[i + 1] = grow_left(&envs.left[i], &mps.cores[i], &cores[i]);
        }
        // right to left
        for i in (0..n - 1).rev() {
            let (d1, d2) = (mps.cores[i].len(), mps.cores[i + 1].len());
            let theta = merge_sites(&mps.cores[i], &mps.cores[i + 1]);
            let (dl, dr) = theta[0].shape();
            let (le, re) = (&envs.left[i], &envs.right[i + 2]);
            let res = lowest_eigenpair(|v| flatten(&apply_local(le, re, &merged[i], &unflatten(v, d1 * d2, dl, dr))), &flatten(&theta), lopts);
            last = res.value;
            let (a, b, disc) = split_two(&unflatten(&res.vector, d1 * d2, dl, dr), d1, d2, opts.chi_max, opts.svd_cutoff, true);
            if disc > max_disc {
                max_disc = disc;
            }
            mps.cores[i] = a;
            mps.cores[i + 1] = b;
            envs.right[i + 1] = grow_right(&envs.right[i + 2], &mps.cores[i + 1], &cores[i + 1], mpo.cores[i + 1].dl);
        }
        mps.center = Some(0);
        mps.normalize();
        let _ = last;
        let e = expectation(&mps, mpo)?.re / mps.norm_sqr();
        let done = trace.last().is_some_and(|&p: &f64| (p - e).abs() < opts.tol_energy);
        trace.push(e);
        if done {
            converged = true;
            break;
        }
    }
    let energy = *trace.last().unwrap_or(&f64::NAN);
    Ok(DmrgOutcome { mps, energy, trace, sweeps, converged, max_discarded: max_disc })
}

fn one_site(mpo: &Mpo, mut mps: Mps, cores: &[SparseCore], opts: &DmrgOptions) -> Result<DmrgOutcome> {
    let n = mps.n_sites();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut chi = mps.max_bond().max(1);
    let mut stage_sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        stage_sweeps += 1;
        // early sweeps are deliberately not solved to full accuracy
        let cap = (opts.eig_max_iter / 8).max(8) * sweeps.min(8);
        let lopts = lanczos_opts(opts, cap.min(opts.eig_max_iter));
        let mut envs = Envs::build(&mps, cores, mpo);
        for i in 0..n {
            solve_site(&mut mps, i, &envs, &cores[i], lopts);
            if i + 1 < n {
                mps.left_orthonormalize(i);
                envs.left[i + 1] = grow_left(&envs.left[i], &mps.cores[i], &cores[i]);
            }
        }
        for i in (0..n).rev() {
            solve_site(&mut mps, i, &envs, &cores[i], lopts);
            if i > 0 {
                mps.right_orthonormalize(i);
                envs.right[i] = grow_right(&envs.right[i + 1], &mps.cores[i], &cores[i], mpo.cores[i].dl);
            }
        }
        mps.center = Some(0);
        mps.normalize();
        let e = expectation(&mps, mpo)?.re / mps.norm_sqr();
        let settled = trace.last().is_some_and(|&p: &f64| (p - e).abs() < opts.tol_energy);
        trace.push(e);
        let saturated = super::max_bonds(&mps.phys_dims(), chi) == super::max_bonds(&mps.phys_dims(), opts.chi_max);
        if settled && saturated && lopts.max_iter == opts.eig_max_iter {
            converged = true;
            break;
        }
        if stage_sweeps >= 2 && !saturated {
            // staged bond growth: double χ every sweep pair
            chi = (chi * 2).min(opts.chi_max);
            mps.expand_bonds(chi, 1e-6, opts.seed.wrapping_add(sweeps as u64));
            mps.canonicalize(0);
            mps.normalize();
            stage_sweeps = 0;
        }
    }
    let energy = *trace.last().unwrap_or(&f64::NAN);
    Ok(DmrgOutcome { mps, energy, trace, sweeps, converged, max_discarded: 0.0 })
}

fn solve_site(mps: &mut Mps, i: usize, envs: &Envs, core: &SparseCore, lopts: LanczosOptions) {
    let theta = &mps.cores[i];
    let (d, (dl, dr)) = (theta.len(), theta[0].shape());
    let (le, re) = (&envs.left[i], &envs.right[i + 1]);
    let res = lowest_eigenpair(|v| flatten(&apply_local(le, re, core, &unflatten(v, d, dl, dr))), &flatten(theta), lopts);
    mps.cores[i] = unflatten(&res.vector, d, dl, dr);
    mps.center = Some(i);
}

/// Left environment from sites `< site` and right environment from sites `> site`.
pub(crate) fn site_environments(mps: &Mps, mpo: &Mpo, site: usize) -> (Vec<CMat>, Vec<CMat>) {
    let mut left = vec![CMat::identity(1, 1)];
    for i in 0..site {
        left = grow_left(&left, &mps.cores[i], &SparseCore::from_core(&mpo.cores[i]));
    }
    let mut right = vec![CMat::identity(1, 1)];
    for i in (site + 1..mps.n_sites()).rev() {
        right = grow_right(&right, &mps.cores[i], &SparseCore::from_core(&mpo.cores[i]), mpo.cores[i].dl);
    }
    (left, right)
}

/// Lowest eigenvector of the one-site effective Hamiltonian, warm-started from `theta`.
pub(crate) fn site_solve(left: &[CMat], right: &[CMat], core: &MpoCore, theta: &[CMat], lopts: LanczosOptions) -> (Vec<CMat>, f64) {
    let sc = SparseCore::from_core(core);
    let (d, (dl, dr)) = (theta.len(), theta[0].shape());
    let res = lowest_eigenpair(|v| flatten(&apply_local(left, right, &sc, &unflatten(v, d, dl, dr))), &flatten(theta), lopts);
    (unflatten(&res.vector, d, dl, dr), res.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{random_pure_covariance, CovarianceState};
    use crate::mpo::{build_hamiltonian, Basis, HamiltonianSpec};
    use crate::mps::{from_dense_exact, normalized_fidelity};
    use crate::oracle::{dense_ground, dense_hamiltonian};

    fn spec_random(n: usize, seed: u64) -> HamiltonianSpec {
        HamiltonianSpec::gaussian(random_pure_covariance(n, 0.4, seed)).unwrap()
    }

    #[test]
    fn vacuum_ground_state() {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(3)).unwrap();
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &[4, 4, 4]).unwrap();
        let out = dmrg(&mpo, &DmrgOptions { chi_max: 2, seed: 3, ..Default::default() }).unwrap();
        assert!(out.converged);
        assert!(out.energy < 1e-10, "{}", out.energy);
        assert!((out.mps.amplitude(&[0, 0, 0]).unwrap().norm() - 1.0).abs() < 1e-8);
        let rep = energy_report(&out.mps, &mpo, VARIANCE_BOND_CAP).unwrap();
        assert!(rep.energy.abs() < 1e-10 && rep.variance < 1e-10);
    }

    #[test]
    fn expectation_matches_dense() {
        let spec = spec_random(3, 5);
        let dims = [3, 4, 3];
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
        let h = dense_hamiltonian(&spec, &dims).unwrap();
        let m = Mps::random(&dims, 4, 8);
        let v = m.to_dense();
        let dense = v.dotc(&(&h.matrix * &v));
        assert!((expectation(&m, &mpo).unwrap() - dense).norm() < 1e-10);
        let hv = &h.matrix * &v;
        let hm = apply_mpo(&m, &mpo, 1000).unwrap().to_dense();
        assert!((hv - hm).norm() < 1e-10);
        assert!(apply_mpo(&m, &mpo, 2).is_err());
    }

    #[test]
    fn random_vacuum_energy_is_photon_number() {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(2)).unwrap();
        let dims = [4, 4];
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
        let m = Mps::random(&dims, 4, 2);
        let v = m.to_dense();
        let mut nbar = 0.0;
        for (f, occ) in crate::mps::all_occupations(&dims).enumerate() {
            nbar += v[f].norm_sqr() * (occ[0] + occ[1]) as f64;
        }
        assert!((energy_report(&m, &mpo, 100).unwrap().energy - nbar).abs() < 1e-10);
    }

    #[test]
    fn random_three_modes_match_dense_ground() {
        let spec = spec_random(3, 17);
        let dims = [5, 5, 5];
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
        let (e0, g) = dense_ground(&dense_hamiltonian(&spec, &dims).unwrap());
        let out = dmrg(&mpo, &DmrgOptions { chi_max: 8, seed: 1, ..Default::default() }).unwrap();
        assert!(out.converged);
        assert!((out.energy - e0).abs() < 1e-7, "{} vs {e0}", out.energy);
        let f = normalized_fidelity(&out.mps, &from_dense_exact(&g.amplitudes, &dims));
        if out.energy < 1.0 {
            assert!(f >= 1.0 - out.energy - 1e-9);
        }
        for w in out.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn one_site_mode_reaches_ground() {
        let spec = spec_random(3, 4);
        let dims = [4, 4, 4];
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &dims).unwrap();
        let (e0, _) = dense_ground(&dense_hamiltonian(&spec, &dims).unwrap());
        let opts = DmrgOptions { mode: DmrgMode::OneSite, chi_max: 16, max_sweeps: 60, seed: 2, ..Default::default() };
        let out = dmrg(&mpo, &opts).unwrap();
        assert!((out.energy - e0).abs() < 1e-7, "{} vs {e0}", out.energy);
    }

    #[test]
    fn eigenstate_has_zero_variance_and_single_mode_works() {
        let spec = spec_random(1, 3);
        let mpo = build_hamiltonian(&spec, &Basis::Fock, &[12]).unwrap();
        let out = dmrg(&mpo, &DmrgOptions::default()).unwrap();
        let rep = energy_report(&out.mps, &mpo, 100).unwrap();
        assert!(rep.variance < 1e-9);
        let (e0, _) = dense_ground(&dense_hamiltonian(&spec, &[12]).unwrap());
        assert!((out.energy - e0).abs() < 1e-9);
    }
}
