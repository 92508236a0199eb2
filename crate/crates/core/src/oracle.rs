//! Dense reference implementations for small systems.
//!
//! Nothing here goes through the MPO machinery: the Hamiltonian is expanded
//! symbolically from its definition `zᵀ (V⁻¹/4) z − N/2`, every monomial is
//! evaluated as a Kronecker product of padded single-mode words, and
//! circuits act on explicit state vectors.

use crate::error::{Error, Result};
use crate::fock::{annihilation, gate_matrix, padded_product, Gate, LadderExpr, Letter};
use crate::gaussian::{williamson, CovarianceState};
use crate::linalg::{c, eigh, kron, multi_index, symplectic_form, CMat, CVec, RMat, C64, I, ONE, ZERO};
use crate::mpo::HamiltonianSpec;

/// Default cap on the full Hilbert-space dimension.
pub const DENSE_CAP: usize = 4096;

/// A state vector on `⊗ C^{dims[i]}`, site 0 most significant.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub dims: Vec<usize>,
    pub amplitudes: CVec,
    /// Set once the vector has been normalized.
    pub normalized: bool,
}

impl DenseState {
    pub fn vacuum(dims: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let mut amplitudes = CVec::zeros(total);
        amplitudes[0] = ONE;
        Self { dims: dims.to_vec(), amplitudes, normalized: true }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalize(mut self) -> Self {
        let n = self.amplitudes.norm();
        if n > 0.0 {
            self.amplitudes /= c(n);
        }
        self.normalized = true;
        self
    }

    pub fn amplitude(&self, occ: &[usize]) -> C64 {
        self.amplitudes[crate::linalg::flat_index(occ, &self.dims)]
    }

    /// Multiplies by a global phase making the largest-magnitude amplitude real-positive.
    pub fn fix_phase(mut self) -> Self {
        let lead = self.amplitudes.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ONE);
        if lead.norm() > 0.0 {
            self.amplitudes *= lead.conj() / lead.norm();
        }
        self
    }

    /// Keeps only occupations below `dims` (no renormalization).
    pub fn cropped(&self, dims: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let amplitudes = CVec::from_fn(total, |f, _| {
            let occ = multi_index(f, dims);
            self.amplitude(&occ)
        });
        Self { dims: dims.to_vec(), amplitudes, normalized: false }
    }

    /// Probability of every occupation, in row-major order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// A full matrix on the tensor-product space.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub dims: Vec<usize>,
    pub matrix: CMat,
}

impl DenseOperator {
    pub fn expectation(&self, psi: &DenseState) -> C64 {
        psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }
}

fn check_cap(dims: &[usize], cap: usize) -> Result<usize> {
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::ResourceLimit(format!("dense dimension {total} exceeds cap {cap}")));
    }
    Ok(total)
}

/// A product of per-site ladder words with a scalar prefactor.
#[derive(Clone, Debug)]
struct Monomial {
    coef: C64,
    words: Vec<Vec<Letter>>,
}

impl Monomial {
    fn scalar(n: usize, coef: C64) -> Self {
        Self { coef, words: vec![vec![]; n] }
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a.iter().chain(b.iter()).copied().collect())
            .collect();
        Monomial { coef: self.coef * other.coef, words }
    }
}

/// Symbolic quadrature vector `z = (X − μ, P + ξ − ν)` with `ξ_i = κ Π_{n≠i} X_n`.
fn symbolic_quadratures(n: usize, mean: &[f64], kappa: f64) -> Vec<Vec<Monomial>> {
    let mut z = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut x = Monomial::scalar(n, ONE);
        x.words[i].push(Letter::X);
        z.push(vec![x, Monomial::scalar(n, c(-mean[i]))]);
    }
    for i in 0..n {
        let mut p = Monomial::scalar(n, ONE);
        p.words[i].push(Letter::P);
        let mut terms = vec![p, Monomial::scalar(n, c(-mean[n + i]))];
        if kappa != 0.0 && n > 1 {
            let mut xi = Monomial::scalar(n, c(kappa));
            for (site, w) in xi.words.iter_mut().enumerate() {
                if site != i {
                    w.push(Letter::X);
                }
            }
            terms.push(xi);
        } else if kappa != 0.0 {
            // a single mode carries the empty product
            terms.push(Monomial::scalar(n, c(kappa)));
        }
        z.push(terms);
    }
    z
}

fn evaluate(mono: &Monomial, dims: &[usize]) -> Result<CMat> {
    let mut out = CMat::from_element(1, 1, mono.coef);
    for (word, &d) in mono.words.iter().zip(dims) {
        let local = padded_product(d, &LadderExpr::word(word))?.data;
        out = kron(&out, &local);
    }
    Ok(out)
}

/// `H = zᵀ (V⁻¹/4) z − N/2` on the Fock space truncated at `dims`.
pub fn dense_hamiltonian(spec: &HamiltonianSpec, dims: &[usize]) -> Result<DenseOperator> {
    dense_hamiltonian_capped(spec, dims, DENSE_CAP)
}

pub fn dense_hamiltonian_capped(spec: &HamiltonianSpec, dims: &[usize], cap: usize) -> Result<DenseOperator> {
    let state = &spec.state;
    let n = state.n_modes();
    if dims.len() != n {
        return Err(Error::ShapeMismatch("one cutoff per mode".into()));
    }
    let total = check_cap(dims, cap)?;
    let vinv = state
        .covariance()
        .clone()
        .try_inverse()
        .ok_or(Error::NonPositiveDefinite { min_eigenvalue: 0.0 })?;
    let z = symbolic_quadratures(n, state.mean(), spec.kappa);
    let mut h = CMat::identity(total, total) * c(-(n as f64) / 2.0);
    for a in 0..2 * n {
        for b in 0..2 * n {
            let w = vinv[(a, b)] / 4.0;
            if w == 0.0 {
                continue;
            }
            for ta in &z[a] {
                for tb in &z[b] {
                    let mut mono = ta.times(tb);
                    mono.coef *= w;
                    h += evaluate(&mono, dims)?;
                }
            }
        }
    }
    Ok(DenseOperator { dims: dims.to_vec(), matrix: h })
}

/// Lowest eigenpair by full diagonalization.
pub fn dense_ground(op: &DenseOperator) -> (f64, DenseState) {
    let (vals, vecs) = eigh(&op.matrix);
    let state = DenseState { dims: op.dims.clone(), amplitudes: vecs.column(0).into_owned(), normalized: true };
    (vals[0], state.fix_phase())
}

/// All eigenvalues, ascending.
pub fn dense_spectrum(op: &DenseOperator) -> Vec<f64> {
    eigh(&op.matrix).0
}

/// Operations understood by [`dense_circuit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircuitOp {
    Single { gate: Gate, mode: usize },
    /// `exp(θ (e^{iφ} a_i a_j† − e^{−iφ} a_i† a_j))`.
    BeamSplitter { theta: f64, phi: f64, modes: (usize, usize) },
    /// `exp(−iκ Π_n X_n)` on all modes.
    GlobalCz { kappa: f64 },
}

/// Circuit applied to the vacuum at working cutoff `2D + 4`, then cropped to `D`.
pub fn dense_circuit(ops: &[CircuitOp], n_modes: usize, dim: usize) -> Result<DenseState> {
    dense_circuit_padded(ops, n_modes, dim, 2 * dim + 4)
}

pub fn dense_circuit_padded(ops: &[CircuitOp], n_modes: usize, dim: usize, work: usize) -> Result<DenseState> {
    let wdims = vec![work; n_modes];
    check_cap(&wdims, 1 << 16)?;
    let mut psi = DenseState::vacuum(&wdims);
    for op in ops {
        match *op {
            CircuitOp::Single { gate, mode } => {
                let u = gate_matrix(gate, work, work).data;
                apply_local(&mut psi, &u, mode);
            }
            CircuitOp::BeamSplitter { theta, phi, modes } => {
                let a = annihilation(work);
                let id = CMat::identity(work, work);
                let ai = kron(&a, &id);
                let aj = kron(&id, &a);
                let e = C64::from_polar(1.0, phi);
                let gen = (&ai * aj.adjoint() * e - ai.adjoint() * &aj * e.conj()) * c(theta);
                let u = crate::linalg::expm(&gen);
                apply_two(&mut psi, &u, modes.0, modes.1);
            }
            CircuitOp::GlobalCz { kappa } => apply_global_cz(&mut psi, kappa),
        }
    }
    Ok(psi.cropped(&vec![dim; n_modes]))
}

/// Applies a single-mode matrix to `mode`.
fn apply_local(psi: &mut DenseState, u: &CMat, mode: usize) {
    let dims = psi.dims.clone();
    let d = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let outer: usize = dims[..mode].iter().product();
    let mut out = CVec::zeros(psi.amplitudes.len());
    for o in 0..outer {
        for i in 0..inner {
            for s_out in 0..d {
                let mut acc = ZERO;
                for s_in in 0..d {
                    acc += u[(s_out, s_in)] * psi.amplitudes[(o * d + s_in) * inner + i];
                }
                out[(o * d + s_out) * inner + i] = acc;
            }
        }
    }
    psi.amplitudes = out;
}

fn apply_two(psi: &mut DenseState, u: &CMat, m1: usize, m2: usize) {
    let dims = psi.dims.clone();
    let total = psi.amplitudes.len();
    let d1 = dims[m1];
    let d2 = dims[m2];
    let mut out = CVec::zeros(total);
    for f in 0..total {
        let occ = multi_index(f, &dims);
        let row = occ[m1] * d2 + occ[m2];
        let amp = psi.amplitudes[f];
        if amp == ZERO {
            continue;
        }
        for s1 in 0..d1 {
            for s2 in 0..d2 {
                let val = u[(s1 * d2 + s2, row)];
                if val != ZERO {
                    let mut o = occ.clone();
                    o[m1] = s1;
                    o[m2] = s2;
                    out[crate::linalg::flat_index(&o, &dims)] += val * amp;
                }
            }
        }
    }
    psi.amplitudes = out;
}

/// `exp(−iκ Π X_n)` through the eigenbasis of the truncated `X` on each mode.
fn apply_global_cz(psi: &mut DenseState, kappa: f64) {
    let dims = psi.dims.clone();
    let bases: Vec<(Vec<f64>, CMat)> = dims.iter().map(|&d| eigh(&crate::fock::quadrature_x(d))).collect();
    for (mode, (_, v)) in bases.iter().enumerate() {
        apply_local(psi, &v.adjoint(), mode);
    }
    for f in 0..psi.amplitudes.len() {
        let occ = multi_index(f, &dims);
        let prod: f64 = occ.iter().enumerate().map(|(m, &k)| bases[m].0[k]).product();
        psi.amplitudes[f] *= (-I * kappa * prod).exp();
    }
    for (mode, (_, v)) in bases.iter().enumerate() {
        apply_local(psi, v, mode);
    }
}

/// Mode operator `Σ_k W_jk a_k` evaluated into a circuit of squeezers + interferometer.
///
/// Returns the Fock amplitudes of a zero-mean pure Gaussian state from its
/// covariance through `|ψ⟩ = c₀ exp(½ Σ B_jk a_j† a_k†)|0⟩`.
///
/// `B` follows from the annihilators of the state: the kernel of `V + iΩ/2`
/// spans combinations `Σ u_j a_j + v_j a_j†` and `B = −v u⁻¹`. The returned
/// vector is exact for every occupation below `dims` (the series terminates
/// once the per-mode degree passes the cutoff).
pub fn gaussian_pure_amplitudes(state: &CovarianceState, dims: &[usize]) -> Result<DenseState> {
    let n = state.n_modes();
    if state.mean().iter().any(|&m| m != 0.0) {
        return Err(Error::InvalidInput("gaussian_pure_amplitudes needs zero means".into()));
    }
    if dims.len() != n {
        return Err(Error::ShapeMismatch("one cutoff per mode".into()));
    }
    let total = check_cap(dims, 1 << 22)?;
    let b = creation_quadratic_form(state.covariance())?;
    let vac = {
        let m = state.covariance() + RMat::identity(2 * n, 2 * n) * 0.5;
        m.determinant().powf(-0.25)
    };

    // coefficients of Π (a_j†)^{n_j}, row-major over dims
    let strides: Vec<usize> = (0..n).map(|i| dims[i + 1..].iter().product()).collect();
    let mut sum = vec![ZERO; total];
    let mut term = vec![ZERO; total];
    term[0] = ONE;
    sum[0] = ONE;
    let max_terms = dims.iter().map(|d| d - 1).sum::<usize>() / 2 + 1;
    for k in 1..=max_terms {
        let mut next = vec![ZERO; total];
        for f in 0..total {
            let t = term[f];
            if t == ZERO {
                continue;
            }
            let occ = multi_index(f, dims);
            for j in 0..n {
                for l in j..n {
                    let coef = if j == l { b[(j, j)] * 0.5 } else { b[(j, l)] };
                    if coef == ZERO {
                        continue;
                    }
                    let mut o = occ.clone();
                    o[j] += 1;
                    o[l] += 1;
                    if o[j] >= dims[j] || o[l] >= dims[l] {
                        continue;
                    }
                    let g: usize = o.iter().zip(&strides).map(|(a, s)| a * s).sum();
                    next[g] += t * coef;
                }
            }
        }
        let boost = c(1.0 / k as f64);
        for (s, x) in sum.iter_mut().zip(next.iter_mut()) {
            *x *= boost;
            *s += *x;
        }
        term = next;
    }
    let amplitudes = CVec::from_fn(total, |f, _| {
        let occ = multi_index(f, dims);
        let fact: f64 = occ.iter().map(|&k| (1..=k).map(|x| x as f64).product::<f64>()).product();
        sum[f] * vac * fact.sqrt()
    });
    Ok(DenseState { dims: dims.to_vec(), amplitudes, normalized: false })
}

/// The symmetric matrix `B` with `|ψ⟩ ∝ exp(½ a†ᵀ B a†)|0⟩` for a pure covariance.
pub fn creation_quadratic_form(v: &RMat) -> Result<CMat> {
    let n = v.nrows() / 2;
    let om = symplectic_form(n);
    let m = v.map(c) + om.map(|x| C64::new(0.0, 0.5 * x));
    let (vals, vecs) = eigh(&m);
    if vals[n - 1].abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("covariance is not pure (kernel eigenvalue {:e})", vals[n - 1])));
    }
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let u = CMat::from_fn(n, n, |j, k| (vecs[(j, k)] - I * vecs[(n + j, k)]) * s2);
    let w = CMat::from_fn(n, n, |j, k| (vecs[(j, k)] + I * vecs[(n + j, k)]) * s2);
    let uinv = u.try_inverse().ok_or_else(|| Error::InvalidInput("singular annihilator basis".into()))?;
    let b = -(w * uinv);
    Ok((&b + b.transpose()) * c(0.5))
}

/// Fock-space photon distribution of a zero-mean mixed Gaussian state.
///
/// The state is purified onto `N` ancilla modes (each thermal factor is half
/// of a two-mode squeezed vacuum) and the ancillas, cut off at `ancilla_dim`,
/// are traced out of the pure amplitudes.
pub fn mixed_fock_distribution(state: &CovarianceState, dims: &[usize], ancilla_dim: usize) -> Result<Vec<f64>> {
    let n = state.n_modes();
    let w = williamson(state.covariance())?;
    // purification covariance in ordering (X_sys, X_anc, P_sys, P_anc)
    let mut big = RMat::zeros(4 * n, 4 * n);
    for k in 0..n {
        let nu = w.nu[k].max(0.5);
        let ch = nu;
        let sh = (nu * nu - 0.25).max(0.0).sqrt();
        let (xs, xa, ps, pa) = (k, n + k, 2 * n + k, 3 * n + k);
        big[(xs, xs)] = ch;
        big[(xa, xa)] = ch;
        big[(ps, ps)] = ch;
        big[(pa, pa)] = ch;
        big[(xs, xa)] = sh;
        big[(xa, xs)] = sh;
        big[(ps, pa)] = -sh;
        big[(pa, ps)] = -sh;
    }
    let mut lift = RMat::identity(4 * n, 4 * n);
    for i in 0..n {
        for j in 0..n {
            lift[(i, j)] = w.s[(i, j)];
            lift[(i, 2 * n + j)] = w.s[(i, n + j)];
            lift[(2 * n + i, j)] = w.s[(n + i, j)];
            lift[(2 * n + i, 2 * n + j)] = w.s[(n + i, n + j)];
        }
    }
    let pure = CovarianceState::new(&lift * big * lift.transpose(), vec![0.0; 4 * n])?;
    let mut all_dims = dims.to_vec();
    all_dims.extend(std::iter::repeat_n(ancilla_dim, n));
    let amps = gaussian_pure_amplitudes(&pure, &all_dims)?;
    let sys_total: usize = dims.iter().product();
    let anc_total = ancilla_dim.pow(n as u32);
    Ok((0..sys_total)
        .map(|s| (0..anc_total).map(|a| amps.amplitudes[s * anc_total + a].norm_sqr()).sum())
        .collect())
}

/// Distribution of the eigencomponents of `state` over integer eigenvalue bins.
///
/// Bins run from 0 to `m_max`; weight on larger eigenvalues is added to the
/// last bin. Eigenvalues carrying weight above 1e-12 that lie more than 0.2
/// from an integer are reported as an error.
pub fn spectral_weights(state: &DenseState, op: &DenseOperator, m_max: usize) -> Result<Vec<f64>> {
    let (vals, vecs) = eigh(&op.matrix);
    let mut weights = vec![0.0; m_max + 1];
    for (k, &lam) in vals.iter().enumerate() {
        let w = vecs.column(k).dotc(&state.amplitudes).norm_sqr();
        if w <= 1e-12 {
            continue;
        }
        let nearest = lam.round();
        let distance = (lam - nearest).abs();
        if distance > 0.2 {
            return Err(Error::SpectrumNotHarmonic { eigenvalue: lam, distance });
        }
        let bin = (nearest.max(0.0) as usize).min(m_max);
        weights[bin] += w;
    }
    Ok(weights)
}
