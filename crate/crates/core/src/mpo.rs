//! Matrix product operators for the sampling Hamiltonian.
//!
//! Every block is written as a finite set of channels per bond. Sites left
//! of the middle site carry channels describing what has been placed so far;
//! sites right of it carry channels describing what is still to come. The
//! middle site glues both descriptions together, which keeps the Gaussian
//! bond dimension at `2·min(n, N−n) + 2`.

use crate::error::{Error, Result};
use crate::fock::{BasisParams, QuadratureSet};
use crate::gaussian::CovarianceState;
use crate::linalg::{c, kron, CMat, RMat, ZERO};

/// One nonzero operator in an MPO core.
#[derive(Clone, Debug, PartialEq)]
pub struct MpoEntry {
    pub left: usize,
    pub right: usize,
    /// `d_out × d_in` local operator.
    pub op: CMat,
}

/// Sparse 4-index core: `W[left, right]` is a local operator.
#[derive(Clone, Debug, PartialEq)]
pub struct MpoCore {
    pub dl: usize,
    pub dr: usize,
    pub d_out: usize,
    pub d_in: usize,
    pub entries: Vec<MpoEntry>,
}

impl MpoCore {
    /// Dense `(dl, d_out, d_in, dr)` element.
    pub fn element(&self, l: usize, s_out: usize, s_in: usize, r: usize) -> crate::linalg::C64 {
        self.entries
            .iter()
            .filter(|e| e.left == l && e.right == r)
            .fold(ZERO, |acc, e| acc + e.op[(s_out, s_in)])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    pub cores: Vec<MpoCore>,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.cores.len()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.d_out).collect()
    }

    /// Bond dimensions at the `N − 1` interior cuts.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores.iter().take(self.cores.len().saturating_sub(1)).map(|c| c.dr).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.cores.iter().map(|c| c.dr.max(c.dl)).max().unwrap_or(1)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        if let Some(core) = self.cores.first_mut() {
            for e in &mut core.entries {
                e.op *= c(s);
            }
        }
        self
    }

    /// Full operator on the tensor-product space, site 0 most significant.
    pub fn to_dense(&self) -> CMat {
        let mut partial: Vec<Option<CMat>> = vec![Some(CMat::identity(1, 1))];
        for core in &self.cores {
            let mut next: Vec<Option<CMat>> = vec![None; core.dr];
            for e in &core.entries {
                if let Some(t) = &partial[e.left] {
                    let term = kron(t, &e.op);
                    match &mut next[e.right] {
                        Some(acc) => *acc += term,
                        slot => *slot = Some(term),
                    }
                }
            }
            partial = next;
        }
        let dim: usize = self.phys_dims().iter().product();
        partial.into_iter().next().flatten().unwrap_or_else(|| CMat::zeros(dim, dim))
    }

    /// Checks boundary bonds and core index ranges.
    pub fn validate(&self) -> Result<()> {
        let n = self.cores.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("empty MPO".into()));
        }
        if self.cores[0].dl != 1 || self.cores[n - 1].dr != 1 {
            return Err(Error::ShapeMismatch("boundary bonds must be 1".into()));
        }
        for (i, core) in self.cores.iter().enumerate() {
            if i + 1 < n && core.dr != self.cores[i + 1].dl {
                return Err(Error::ShapeMismatch(format!("bond mismatch at cut {}", i + 1)));
            }
            for e in &core.entries {
                if e.left >= core.dl || e.right >= core.dr || e.op.shape() != (core.d_out, core.d_in) {
                    return Err(Error::ShapeMismatch(format!("bad entry in core {i}")));
                }
            }
        }
        Ok(())
    }
}

/// Direct sum of operators sharing all physical dimensions.
pub fn block_sum(blocks: &[Mpo]) -> Mpo {
    assert!(!blocks.is_empty());
    let n = blocks[0].n_sites();
    assert!(blocks.iter().all(|b| b.n_sites() == n));
    if n == 1 {
        let mut core = blocks[0].cores[0].clone();
        for b in &blocks[1..] {
            core.entries.extend(b.cores[0].entries.iter().cloned());
        }
        return Mpo { cores: vec![core] };
    }
    let mut cores = Vec::with_capacity(n);
    for site in 0..n {
        let (mut lo, mut ro) = (0, 0);
        let mut entries = Vec::new();
        for b in blocks {
            let core = &b.cores[site];
            for e in &core.entries {
                let left = if site == 0 { 0 } else { e.left + lo };
                let right = if site == n - 1 { 0 } else { e.right + ro };
                entries.push(MpoEntry { left, right, op: e.op.clone() });
            }
            lo += core.dl;
            ro += core.dr;
        }
        let template = &blocks[0].cores[site];
        cores.push(MpoCore {
            dl: if site == 0 { 1 } else { lo },
            dr: if site == n - 1 { 1 } else { ro },
            d_out: template.d_out,
            d_in: template.d_in,
            entries,
        });
    }
    Mpo { cores }
}

/// Hamiltonian coefficients `α, β, γ` (halved blocks of `V⁻¹`) and `b = β/2`.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub state: CovarianceState,
    pub kappa: f64,
    pub alpha: RMat,
    pub beta: RMat,
    pub gamma: RMat,
    pub b: RMat,
}

impl HamiltonianSpec {
    pub fn new(state: CovarianceState, kappa: f64) -> Result<Self> {
        let (alpha, beta, gamma) = coefficient_blocks(&state)?;
        let b = &beta * 0.5;
        Ok(Self { state, kappa, alpha, beta, gamma, b })
    }

    pub fn gaussian(state: CovarianceState) -> Result<Self> {
        Self::new(state, 0.0)
    }

    pub fn n_modes(&self) -> usize {
        self.state.n_modes()
    }

    /// Recomputes the coefficients from `V` and compares (tolerance 1e-10).
    pub fn check_integrity(&self) -> Result<()> {
        let (alpha, beta, gamma) = coefficient_blocks(&self.state)?;
        let b = &beta * 0.5;
        let dev = [(&alpha, &self.alpha), (&beta, &self.beta), (&gamma, &self.gamma), (&b, &self.b)]
            .iter()
            .map(|(x, y)| if x.shape() == y.shape() { (*x - *y).amax() } else { f64::INFINITY })
            .fold(0.0f64, f64::max);
        if dev > 1e-10 {
            return Err(Error::Integrity { deviation: dev });
        }
        Ok(())
    }

    /// `c = γᵀμ + βν`, the coefficients of the mean correction to `ξ`.
    pub fn mean_coupling(&self) -> Vec<f64> {
        let n = self.n_modes();
        let mean = self.state.mean();
        (0..n)
            .map(|k| (0..n).map(|j| self.gamma[(j, k)] * mean[j] + self.beta[(k, j)] * mean[n + j]).sum())
            .collect()
    }
}

fn coefficient_blocks(state: &CovarianceState) -> Result<(RMat, RMat, RMat)> {
    let n = state.n_modes();
    let vinv = state
        .covariance()
        .clone()
        .try_inverse()
        .ok_or(Error::NonPositiveDefinite { min_eigenvalue: 0.0 })?;
    let alpha = vinv.view((0, 0), (n, n)) * 0.5;
    let beta = vinv.view((n, n), (n, n)) * 0.5;
    let gamma = vinv.view((0, n), (n, n)) * 0.5;
    Ok((alpha.into_owned(), beta.into_owned(), gamma.into_owned()))
}

/// Choice of local basis for every mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Fock,
    /// Per-mode symplectic 2×2 matrices; the mode's mean is folded in as a displacement.
    Olb(Vec<[[f64; 2]; 2]>),
    Plbo(Vec<BasisParams>),
}

/// Local quadrature operators of every site for a given basis and cutoffs.
pub fn apply_basis(spec: &HamiltonianSpec, basis: &Basis, dims: &[usize]) -> Result<Vec<QuadratureSet>> {
    let n = spec.n_modes();
    if dims.len() != n {
        return Err(Error::ShapeMismatch(format!("expected {n} cutoffs, got {}", dims.len())));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidInput("cutoffs must be positive".into()));
    }
    match basis {
        Basis::Fock => Ok(dims.iter().map(|&d| QuadratureSet::fock(d)).collect()),
        Basis::Olb(s_list) => {
            if s_list.len() != n {
                return Err(Error::ShapeMismatch("one symplectic matrix per mode".into()));
            }
            Ok((0..n).map(|i| QuadratureSet::linear(s_list[i], spec.state.mode_mean(i), dims[i])).collect())
        }
        Basis::Plbo(params) => {
            if params.len() != n {
                return Err(Error::ShapeMismatch("one parameter set per mode".into()));
            }
            Ok((0..n).map(|i| QuadratureSet::plbo(&params[i], dims[i])).collect())
        }
    }
}

/// Index of the site that joins the left and right channel descriptions.
fn middle_site(n: usize) -> usize {
    (n - 1) / 2
}

/// Builds an MPO from per-cut channel lists and a local-entry rule.
fn assemble<S: PartialEq>(
    dims: &[usize],
    states: impl Fn(usize) -> Vec<S>,
    entry: impl Fn(usize, &S, &S) -> Option<CMat>,
) -> Mpo {
    let n = dims.len();
    let cuts: Vec<Vec<S>> = (0..=n).map(&states).collect();
    let cores = (0..n)
        .map(|site| {
            let mut entries = Vec::new();
            for (li, ls) in cuts[site].iter().enumerate() {
                for (ri, rs) in cuts[site + 1].iter().enumerate() {
                    if let Some(op) = entry(site, ls, rs) {
                        entries.push(MpoEntry { left: li, right: ri, op });
                    }
                }
            }
            MpoCore { dl: cuts[site].len(), dr: cuts[site + 1].len(), d_out: dims[site], d_in: dims[site], entries }
        })
        .collect();
    Mpo { cores }
}

/// Per-site operators used by the Hamiltonian blocks.
struct SiteOps {
    id: CMat,
    q: QuadratureSet,
}

fn site_ops(local: &[QuadratureSet]) -> Vec<SiteOps> {
    local.iter().map(|q| SiteOps { id: CMat::identity(q.dim(), q.dim()), q: q.clone() }).collect()
}

fn dims_of(local: &[QuadratureSet]) -> Vec<usize> {
    local.iter().map(|q| q.dim()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum GChan {
    Id,
    Done,
    X(usize),
    P(usize),
}

/// Gaussian part `½ z̃ᵀ [[α, γ], [γᵀ, β]] z̃ − N/2` with `z̃ = (X − μ, P − ν)`.
pub fn gaussian_mpo(spec: &HamiltonianSpec, local: &[QuadratureSet]) -> Mpo {
    let n = spec.n_modes();
    assert_eq!(local.len(), n);
    let m = middle_site(n);
    let (al, be, ga) = (&spec.alpha, &spec.beta, &spec.gamma);
    let ops = site_ops(local);
    // shifted quadratures and the single-site term
    let shifted: Vec<(CMat, CMat, CMat)> = (0..n)
        .map(|i| {
            let (mx, mp) = spec.state.mode_mean(i);
            let o = &ops[i];
            let x = &o.q.x - &o.id * c(mx);
            let p = &o.q.p - &o.id * c(mp);
            let x2 = &o.q.x2 - &o.q.x * c(2.0 * mx) + &o.id * c(mx * mx);
            let p2 = &o.q.p2 - &o.q.p * c(2.0 * mp) + &o.id * c(mp * mp);
            let xp = &o.q.xp - &o.q.x * c(2.0 * mp) - &o.q.p * c(2.0 * mx) + &o.id * c(2.0 * mx * mp);
            let s = (x2 * c(al[(i, i)]) + p2 * c(be[(i, i)]) + xp * c(ga[(i, i)])) * c(0.5) - &o.id * c(0.5);
            (x, p, s)
        })
        .collect();
    let lin = |i: usize, cx: f64, cp: f64| &shifted[i].0 * c(cx) + &shifted[i].1 * c(cp);

    let states = |cut: usize| -> Vec<GChan> {
        if cut == 0 || cut == n {
            return vec![GChan::Id];
        }
        let range: Vec<usize> = if cut <= m { (0..cut).collect() } else { (cut..n).collect() };
        let mut v = vec![GChan::Id, GChan::Done];
        v.extend(range.iter().map(|&j| GChan::X(j)));
        v.extend(range.iter().map(|&j| GChan::P(j)));
        v
    };
    let entry = |i: usize, l: &GChan, r: &GChan| -> Option<CMat> {
        use GChan::*;
        let id = &ops[i].id;
        if i < m {
            match (*l, *r) {
                (Id, Id) | (Done, Done) => Some(id.clone()),
                (Id, Done) => Some(shifted[i].2.clone()),
                (X(j), X(k)) | (P(j), P(k)) if j == k => Some(id.clone()),
                (Id, X(k)) if k == i => Some(shifted[i].0.clone()),
                (Id, P(k)) if k == i => Some(shifted[i].1.clone()),
                (X(j), Done) => Some(lin(i, al[(j, i)], ga[(j, i)])),
                (P(j), Done) => Some(lin(i, ga[(i, j)], be[(j, i)])),
                _ => None,
            }
        } else if i == m {
            match (*l, *r) {
                (Done, Id) | (Id, Done) => Some(id.clone()),
                (Id, Id) => Some(shifted[i].2.clone()),
                (X(j), Id) => Some(lin(i, al[(j, i)], ga[(j, i)])),
                (P(j), Id) => Some(lin(i, ga[(i, j)], be[(j, i)])),
                (Id, X(k)) => Some(lin(i, al[(i, k)], ga[(k, i)])),
                (Id, P(k)) => Some(lin(i, ga[(i, k)], be[(i, k)])),
                (X(j), X(k)) => Some(id * c(al[(j, k)])),
                (X(j), P(k)) => Some(id * c(ga[(j, k)])),
                (P(j), X(k)) => Some(id * c(ga[(k, j)])),
                (P(j), P(k)) => Some(id * c(be[(j, k)])),
                _ => None,
            }
        } else {
            match (*l, *r) {
                (Id, Id) | (Done, Done) => Some(id.clone()),
                (Done, Id) => Some(shifted[i].2.clone()),
                (X(j), X(k)) | (P(j), P(k)) if j == k => Some(id.clone()),
                (X(j), Id) if j == i => Some(shifted[i].0.clone()),
                (P(j), Id) if j == i => Some(shifted[i].1.clone()),
                (Done, X(k)) => Some(lin(i, al[(i, k)], ga[(k, i)])),
                (Done, P(k)) => Some(lin(i, ga[(i, k)], be[(i, k)])),
                _ => None,
            }
        }
    };
    assemble(&dims_of(local), states, entry)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum SChan {
    Str,
    Done,
}

/// `Σ_k f_k Π_{n≠k} g_n`: one special operator `f` on a background string `g`.
fn single_special_mpo(dims: &[usize], background: &[CMat], special: &[CMat]) -> Mpo {
    let n = dims.len();
    let m = middle_site(n);
    let states = |cut: usize| -> Vec<SChan> {
        if cut == 0 || cut == n {
            vec![SChan::Str]
        } else {
            vec![SChan::Str, SChan::Done]
        }
    };
    let entry = |i: usize, l: &SChan, r: &SChan| -> Option<CMat> {
        use SChan::*;
        let g = || Some(background[i].clone());
        let f = || Some(special[i].clone());
        use std::cmp::Ordering::*;
        match (i.cmp(&m), *l, *r) {
            (Equal, Str, Str) => f(),
            (Equal, Done, Str) | (Equal, Str, Done) => g(),
            (Equal, Done, Done) => None,
            (_, Str, Str) | (_, Done, Done) => g(),
            (Less, Str, Done) | (Greater, Done, Str) => f(),
            _ => None,
        }
    };
    assemble(dims, states, entry)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BChan {
    Str,
    Done,
    SpecX(usize),
    SpecP(usize),
    Idle(usize),
}

/// `Σ_{j≠k} [γ_jk X_j² + β_jk {X_j, P_j}/2] Π_{n≠j,k} X_n + Tr γ · Π X_n` (unscaled).
fn blue_mpo(spec: &HamiltonianSpec, local: &[QuadratureSet]) -> Mpo {
    let n = spec.n_modes();
    let m = middle_site(n);
    let (be, ga) = (&spec.beta, &spec.gamma);
    let ops = site_ops(local);
    let trace_gamma: f64 = (0..n).map(|i| ga[(i, i)]).sum();
    let states = |cut: usize| -> Vec<BChan> {
        if cut == 0 || cut == n {
            return vec![BChan::Str];
        }
        let range: Vec<usize> = if cut <= m { (0..cut).collect() } else { (cut..n).collect() };
        let mut v = vec![BChan::Str];
        if range.len() >= 2 {
            v.push(BChan::Done);
        }
        v.extend(range.iter().map(|&j| BChan::SpecX(j)));
        v.extend(range.iter().map(|&j| BChan::SpecP(j)));
        v.extend(range.iter().map(|&j| BChan::Idle(j)));
        v
    };
    // special operator on site j paired with idle site k
    let spec_op = |j: usize, k: usize| &ops[j].q.x2 * c(ga[(j, k)]) + &ops[j].q.xp * c(0.5 * be[(j, k)]);
    let entry = |i: usize, l: &BChan, r: &BChan| -> Option<CMat> {
        use BChan::*;
        let o = &ops[i];
        if i < m {
            match (*l, *r) {
                (Str, Str) | (Done, Done) => Some(o.q.x.clone()),
                (Str, SpecX(k)) if k == i => Some(o.q.x2.clone()),
                (Str, SpecP(k)) if k == i => Some(&o.q.xp * c(0.5)),
                (Str, Idle(k)) if k == i => Some(o.id.clone()),
                (SpecX(j), SpecX(k)) | (SpecP(j), SpecP(k)) | (Idle(j), Idle(k)) if j == k => Some(o.q.x.clone()),
                (SpecX(j), Done) => Some(&o.id * c(ga[(j, i)])),
                (SpecP(j), Done) => Some(&o.id * c(be[(j, i)])),
                (Idle(k), Done) => Some(spec_op(i, k)),
                _ => None,
            }
        } else if i == m {
            match (*l, *r) {
                (Str, Str) => Some(&o.q.x * c(trace_gamma)),
                (Done, Str) | (Str, Done) => Some(o.q.x.clone()),
                (Str, Idle(k)) | (Idle(k), Str) => Some(spec_op(i, k)),
                (Str, SpecX(j)) | (SpecX(j), Str) => Some(&o.id * c(ga[(j, i)])),
                (Str, SpecP(j)) | (SpecP(j), Str) => Some(&o.id * c(be[(j, i)])),
                (SpecX(j), Idle(k)) | (Idle(k), SpecX(j)) => Some(&o.q.x * c(ga[(j, k)])),
                (SpecP(j), Idle(k)) | (Idle(k), SpecP(j)) => Some(&o.q.x * c(be[(j, k)])),
                _ => None,
            }
        } else {
            match (*l, *r) {
                (Str, Str) | (Done, Done) => Some(o.q.x.clone()),
                (SpecX(j), Str) if j == i => Some(o.q.x2.clone()),
                (SpecP(j), Str) if j == i => Some(&o.q.xp * c(0.5)),
                (Idle(j), Str) if j == i => Some(o.id.clone()),
                (SpecX(j), SpecX(k)) | (SpecP(j), SpecP(k)) | (Idle(j), Idle(k)) if j == k => Some(o.q.x.clone()),
                (Done, SpecX(j)) => Some(&o.id * c(ga[(j, i)])),
                (Done, SpecP(j)) => Some(&o.id * c(be[(j, i)])),
                (Done, Idle(k)) => Some(spec_op(i, k)),
                _ => None,
            }
        }
    };
    assemble(&dims_of(local), states, entry)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum MChan {
    Str,
    One(usize),
    Done,
}

/// `Σ_{j<k} β_jk X_j X_k Π_{n≠j,k} X_n²` (unscaled).
fn magenta_mpo(spec: &HamiltonianSpec, local: &[QuadratureSet]) -> Mpo {
    let n = spec.n_modes();
    let m = middle_site(n);
    let be = &spec.beta;
    let ops = site_ops(local);
    let states = |cut: usize| -> Vec<MChan> {
        if cut == 0 || cut == n {
            return vec![MChan::Str];
        }
        let range: Vec<usize> = if cut <= m { (0..cut).collect() } else { (cut..n).collect() };
        let mut v = vec![MChan::Str];
        if range.len() >= 2 {
            v.push(MChan::Done);
        }
        v.extend(range.iter().map(|&j| MChan::One(j)));
        v
    };
    let entry = |i: usize, l: &MChan, r: &MChan| -> Option<CMat> {
        use MChan::*;
        let q = &ops[i].q;
        if i < m {
            match (*l, *r) {
                (Str, Str) | (Done, Done) => Some(q.x2.clone()),
                (One(j), One(k)) if j == k => Some(q.x2.clone()),
                (Str, One(k)) if k == i => Some(q.x.clone()),
                (One(j), Done) => Some(&q.x * c(be[(j, i)])),
                _ => None,
            }
        } else if i == m {
            match (*l, *r) {
                (Done, Str) | (Str, Done) => Some(q.x2.clone()),
                (One(j), Str) | (Str, One(j)) => Some(&q.x * c(be[(j, i)])),
                (One(j), One(k)) => Some(&q.x2 * c(be[(j, k)])),
                _ => None,
            }
        } else {
            match (*l, *r) {
                (Str, Str) | (Done, Done) => Some(q.x2.clone()),
                (One(j), One(k)) if j == k => Some(q.x2.clone()),
                (One(j), Str) if j == i => Some(q.x.clone()),
                (Done, One(k)) => Some(&q.x * c(be[(i, k)])),
                _ => None,
            }
        }
    };
    assemble(&dims_of(local), states, entry)
}

/// The non-Gaussian blocks of the global-CZ Hamiltonian, already scaled by `κ` or `κ²`.
///
/// In order: `κ Σ_k (β_kk P_k − c_k) Π_{n≠k} X_n`, `κ² Σ_k b_kk Π_{n≠k} X_n²`,
/// the mixed `γ`/`β` off-diagonal block (`κ`), and the `β_{j<k}` block (`κ²`).
/// `c = γᵀμ + βν` collects the mean corrections of the cross terms.
pub fn cz_diagonal_mpos(spec: &HamiltonianSpec, local: &[QuadratureSet]) -> Vec<Mpo> {
    let n = spec.n_modes();
    let k = spec.kappa;
    let dims = dims_of(local);
    let ops = site_ops(local);
    let coupling = spec.mean_coupling();
    let xs: Vec<CMat> = ops.iter().map(|o| o.q.x.clone()).collect();
    let x2s: Vec<CMat> = ops.iter().map(|o| o.q.x2.clone()).collect();
    let purple_p: Vec<CMat> =
        (0..n).map(|i| &ops[i].q.p * c(spec.beta[(i, i)]) - &ops[i].id * c(coupling[i])).collect();
    let purple_b: Vec<CMat> = (0..n).map(|i| &ops[i].id * c(spec.b[(i, i)])).collect();
    vec![
        single_special_mpo(&dims, &xs, &purple_p).scaled(k),
        single_special_mpo(&dims, &x2s, &purple_b).scaled(k * k),
        blue_mpo(spec, local).scaled(k),
        magenta_mpo(spec, local).scaled(k * k),
    ]
}

/// The full sampling Hamiltonian as a block-diagonal MPO.
pub fn full_hamiltonian_mpo(spec: &HamiltonianSpec, local: &[QuadratureSet]) -> Mpo {
    let g = gaussian_mpo(spec, local);
    if spec.kappa == 0.0 {
        return g;
    }
    let mut blocks = vec![g];
    blocks.extend(cz_diagonal_mpos(spec, local));
    block_sum(&blocks)
}

/// Convenience: spec + basis + uniform cutoff.
pub fn build_hamiltonian(spec: &HamiltonianSpec, basis: &Basis, dims: &[usize]) -> Result<Mpo> {
    let local = apply_basis(spec, basis, dims)?;
    Ok(full_hamiltonian_mpo(spec, &local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::random_pure_covariance;
    use crate::linalg::{eigh, max_abs, max_abs_diff};

    fn fock(n: usize, d: usize) -> Vec<QuadratureSet> {
        vec![QuadratureSet::fock(d); n]
    }

    #[test]
    fn single_mode_vacuum_is_number_operator() {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(1)).unwrap();
        let h = gaussian_mpo(&spec, &fock(1, 5)).to_dense();
        assert!(max_abs_diff(&h, &crate::fock::number(5)) < 1e-13);
    }

    #[test]
    fn two_mode_vacuum_spectrum() {
        let spec = HamiltonianSpec::gaussian(CovarianceState::vacuum(2)).unwrap();
        let h = gaussian_mpo(&spec, &fock(2, 3)).to_dense();
        let (vals, _) = eigh(&h);
        let want = [0.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 4.0];
        for (a, b) in vals.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_bond_dimensions() {
        for n in 1..=7 {
            let spec = HamiltonianSpec::gaussian(random_pure_covariance(n, 0.5, n as u64)).unwrap();
            let mpo = gaussian_mpo(&spec, &fock(n, 3));
            mpo.validate().unwrap();
            for (cut, &b) in mpo.bond_dims().iter().enumerate() {
                let cut = cut + 1;
                assert_eq!(b, 2 * cut.min(n - cut) + 2, "n={n} cut={cut}");
            }
        }
    }

    #[test]
    fn kappa_zero_blocks_vanish() {
        let spec = HamiltonianSpec::new(random_pure_covariance(3, 0.5, 2), 0.0).unwrap();
        for block in cz_diagonal_mpos(&spec, &fock(3, 3)) {
            assert!(max_abs(&block.to_dense()) == 0.0);
        }
    }

    #[test]
    fn hermitian_dense() {
        let spec = HamiltonianSpec::new(random_pure_covariance(3, 0.7, 5), 0.3).unwrap();
        let h = full_hamiltonian_mpo(&spec, &fock(3, 4)).to_dense();
        assert!(max_abs_diff(&h, &h.adjoint()) < 1e-9);
    }

    #[test]
    fn integrity_check_detects_tampering() {
        let mut spec = HamiltonianSpec::gaussian(random_pure_covariance(2, 0.5, 1)).unwrap();
        spec.check_integrity().unwrap();
        spec.alpha[(0, 1)] += 1e-6;
        assert!(matches!(spec.check_integrity(), Err(Error::Integrity { .. })));
    }

    #[test]
    fn olb_identity_is_fock() {
        let spec = HamiltonianSpec::new(random_pure_covariance(2, 0.5, 3), 0.2).unwrap();
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let a = build_hamiltonian(&spec, &Basis::Fock, &[4, 4]).unwrap().to_dense();
        let b = build_hamiltonian(&spec, &Basis::Olb(vec![id; 2]), &[4, 4]).unwrap().to_dense();
        let p = build_hamiltonian(&spec, &Basis::Plbo(vec![BasisParams::default(); 2]), &[4, 4]).unwrap().to_dense();
        assert!(max_abs_diff(&a, &b) < 1e-14);
        assert_eq!(a, p);
    }

    #[test]
    fn matches_dense_oracle_with_means_and_kappa() {
        use crate::oracle::dense_hamiltonian;
        for n in 1..=4 {
            for (k, kappa) in [0.0, 0.1, 0.3].into_iter().enumerate() {
                let d = if n == 4 { 3 } else { 4 };
                let mut state = random_pure_covariance(n, 0.6, (10 * n + k) as u64);
                let mean: Vec<f64> = (0..2 * n).map(|i| 0.1 * (i as f64) - 0.2).collect();
                state = state.with_mean(mean).unwrap();
                let spec = HamiltonianSpec::new(state, kappa).unwrap();
                let dims = vec![d; n];
                let h = full_hamiltonian_mpo(&spec, &fock(n, d)).to_dense();
                let o = dense_hamiltonian(&spec, &dims).unwrap().matrix;
                assert!(max_abs_diff(&h, &o) < 1e-9, "n={n} kappa={kappa}: {}", max_abs_diff(&h, &o));
            }
        }
    }
}
