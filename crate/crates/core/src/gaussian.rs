//! Covariance-matrix machinery for Gaussian states.
//!
//! Quadratures are ordered `(X_1 … X_N, P_1 … P_N)` with ħ = 1, so the
//! vacuum covariance is `I/2`. Every function here is a pure function of
//! its inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigh_real, sqrtm_pd, symplectic_form, CMat, RMat, C64};

/// Covariance matrix and mean vector of an `N`-mode Gaussian state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceFile", into = "CovarianceFile")]
pub struct CovarianceState {
    n_modes: usize,
    v: RMat,
    mean: Vec<f64>,
}

/// On-disk JSON layout: `{"n_modes": N, "V": [[...]], "mean": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceFile {
    pub n_modes: usize,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl TryFrom<CovarianceFile> for CovarianceState {
    type Error = Error;

    fn try_from(file: CovarianceFile) -> Result<Self> {
        let dim = 2 * file.n_modes;
        if file.v.len() != dim || file.v.iter().any(|row| row.len() != dim) {
            return Err(Error::ShapeMismatch(format!("V must be {dim}x{dim}")));
        }
        let v = RMat::from_fn(dim, dim, |i, j| file.v[i][j]);
        CovarianceState::new(v, file.mean)
    }
}

impl From<CovarianceState> for CovarianceFile {
    fn from(state: CovarianceState) -> Self {
        let dim = 2 * state.n_modes;
        CovarianceFile {
            n_modes: state.n_modes,
            v: (0..dim).map(|i| (0..dim).map(|j| state.v[(i, j)]).collect()).collect(),
            mean: state.mean,
        }
    }
}

impl CovarianceState {
    /// Validates shape and symmetry (1e-12 relative).
    pub fn new(v: RMat, mean: Vec<f64>) -> Result<Self> {
        let dim = v.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || v.ncols() != dim {
            return Err(Error::ShapeMismatch(format!("covariance must be 2N x 2N, got {}x{}", v.nrows(), v.ncols())));
        }
        if mean.len() != dim {
            return Err(Error::ShapeMismatch(format!("mean must have length {dim}, got {}", mean.len())));
        }
        let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
        let asym = (&v - v.transpose()).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("covariance not symmetric (deviation {asym:e})")));
        }
        if v.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite covariance entry".into()));
        }
        let v = (&v + v.transpose()) * 0.5;
        Ok(Self { n_modes: dim / 2, v, mean })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            v: RMat::identity(2 * n_modes, 2 * n_modes) * 0.5,
            mean: vec![0.0; 2 * n_modes],
        }
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != 2 * self.n_modes {
            return Err(Error::ShapeMismatch("mean length".into()));
        }
        self.mean = mean;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn covariance(&self) -> &RMat {
        &self.v
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `(⟨X_i⟩, ⟨P_i⟩)` for one mode.
    pub fn mode_mean(&self, mode: usize) -> (f64, f64) {
        (self.mean[mode], self.mean[self.n_modes + mode])
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(williamson(&self.v)?.nu)
    }

    /// All symplectic eigenvalues at least `1/2 - 1e-10`.
    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues().map(|nu| nu.iter().all(|&x| x >= 0.5 - 1e-10)).unwrap_or(false)
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues().map(|nu| nu.iter().all(|&x| (x - 0.5).abs() <= tol)).unwrap_or(false)
    }

    /// `V → S V Sᵀ`, `mean → S mean`.
    pub fn transformed(&self, s: &RMat) -> Self {
        let m = nalgebra::DVector::from_column_slice(&self.mean);
        let mean = s * m;
        Self { n_modes: self.n_modes, v: s * &self.v * s.transpose(), mean: mean.iter().copied().collect() }
    }

    /// Pure-loss channel of transmissivity `eta` on one mode.
    pub fn with_loss(&self, mode: usize, eta: f64) -> Self {
        let n = self.n_modes;
        let mut scale = RMat::identity(2 * n, 2 * n);
        scale[(mode, mode)] = eta.sqrt();
        scale[(n + mode, n + mode)] = eta.sqrt();
        let mut out = self.transformed(&scale);
        out.v[(mode, mode)] += (1.0 - eta) * 0.5;
        out.v[(n + mode, n + mode)] += (1.0 - eta) * 0.5;
        out
    }

    /// Thermal product state with the given mean occupations.
    pub fn thermal(nbar: &[f64]) -> Self {
        let n = nbar.len();
        let mut v = RMat::zeros(2 * n, 2 * n);
        for (i, &nb) in nbar.iter().enumerate() {
            v[(i, i)] = nb + 0.5;
            v[(n + i, n + i)] = nb + 0.5;
        }
        Self { n_modes: n, v, mean: vec![0.0; 2 * n] }
    }

    /// Product of single-mode squeezed vacua, `Var(X_i) = e^{-2 r_i}/2`.
    pub fn squeezed_product(r: &[f64]) -> Self {
        let n = r.len();
        let mut v = RMat::zeros(2 * n, 2 * n);
        for (i, &ri) in r.iter().enumerate() {
            v[(i, i)] = 0.5 * (-2.0 * ri).exp();
            v[(n + i, n + i)] = 0.5 * (2.0 * ri).exp();
        }
        Self { n_modes: n, v, mean: vec![0.0; 2 * n] }
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let ch = (2.0 * r).cosh() * 0.5;
        let sh = (2.0 * r).sinh() * 0.5;
        let v = RMat::from_row_slice(4, 4, &[ch, sh, 0.0, 0.0, sh, ch, 0.0, 0.0, 0.0, 0.0, ch, -sh, 0.0, 0.0, -sh, ch]);
        Self { n_modes: 2, v, mean: vec![0.0; 4] }
    }
}

/// Output of the Williamson decomposition `V = S diag(ν, ν) Sᵀ`.
#[derive(Clone, Debug)]
pub struct WilliamsonResult {
    pub s: RMat,
    /// Symplectic eigenvalues, ascending.
    pub nu: Vec<f64>,
}

impl WilliamsonResult {
    pub fn reconstruct(&self) -> RMat {
        let n = self.nu.len();
        let mut d = RMat::zeros(2 * n, 2 * n);
        for (k, &nu) in self.nu.iter().enumerate() {
            d[(k, k)] = nu;
            d[(n + k, n + k)] = nu;
        }
        &self.s * d * self.s.transpose()
    }

    pub fn symplectic_residual(&self) -> f64 {
        symplectic_residual(&self.s)
    }
}

/// `‖S Ω Sᵀ − Ω‖_max`.
pub fn symplectic_residual(s: &RMat) -> f64 {
    let om = symplectic_form(s.nrows() / 2);
    (s * &om * s.transpose() - om).iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Williamson decomposition of a real symmetric positive definite matrix.
///
/// With `M = V^{1/2}` the antisymmetric matrix `A = M⁻¹ Ω M⁻¹` is brought to
/// canonical form through the Hermitian eigenproblem of `iA`; its positive
/// eigenvalues are `1/ν_k`. Each eigenvector's phase is fixed so its first
/// component above 1e-8 in magnitude is positive imaginary, which makes
/// already-diagonal inputs return `S = I`.
pub fn williamson(v: &RMat) -> Result<WilliamsonResult> {
    let dim = v.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || v.ncols() != dim {
        return Err(Error::ShapeMismatch("williamson needs a 2N x 2N matrix".into()));
    }
    let n = dim / 2;
    let (m, minv, min_eig) = sqrtm_pd(v);
    if min_eig <= 1e-12 {
        return Err(Error::NonPositiveDefinite { min_eigenvalue: min_eig });
    }
    let om = symplectic_form(n);
    let a = &minv * om * &minv;
    let ia: CMat = a.map(|x| C64::new(0.0, x));
    let (vals, vecs) = eigh(&ia);

    let mut o = RMat::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    for k in 0..n {
        let idx = dim - 1 - k;
        let t = vals[idx];
        let mut u = vecs.column(idx).into_owned();
        if let Some(lead) = u.iter().find(|z| z.norm() > 1e-8).copied() {
            let phase = C64::new(0.0, 1.0) * lead.conj() / lead.norm();
            u *= phase;
        }
        let s2 = std::f64::consts::SQRT_2;
        for r in 0..dim {
            o[(r, k)] = s2 * u[r].im;
            o[(r, n + k)] = s2 * u[r].re;
        }
        nu.push(1.0 / t);
    }
    let mut scale = RMat::zeros(dim, dim);
    for (k, &x) in nu.iter().enumerate() {
        scale[(k, k)] = 1.0 / x.sqrt();
        scale[(n + k, n + k)] = 1.0 / x.sqrt();
    }
    let s = m * o * scale;
    Ok(WilliamsonResult { s, nu })
}

/// 2×2 marginal covariance of one mode.
pub fn reduced_covariance(state: &CovarianceState, mode: usize) -> Result<RMat> {
    let n = state.n_modes;
    if mode >= n {
        return Err(Error::IndexOutOfRange { index: mode, len: n });
    }
    let v = &state.v;
    Ok(RMat::from_row_slice(2, 2, &[v[(mode, mode)], v[(mode, n + mode)], v[(n + mode, mode)], v[(n + mode, n + mode)]]))
}

/// `n̄ = ν − 1/2` of the mode's marginal, clipped at zero.
pub fn mean_photon(state: &CovarianceState, mode: usize) -> Result<f64> {
    let red = reduced_covariance(state, mode)?;
    let w = williamson(&red)?;
    Ok((w.nu[0] - 0.5).max(0.0))
}

/// Total photon-number mean and standard deviation summed over modal marginals.
///
/// Per mode: `⟨n⟩ = (Tr V − 1)/2 + |d|²/2` and
/// `Var n = (Tr V² − 1/2)/2 + dᵀ V d`.
pub fn photon_number_stats(state: &CovarianceState) -> (f64, f64) {
    let mut total_mean = 0.0;
    let mut total_var = 0.0;
    for mode in 0..state.n_modes {
        let red = reduced_covariance(state, mode).expect("mode in range");
        let (mx, mp) = state.mode_mean(mode);
        let d = nalgebra::Vector2::new(mx, mp);
        let trace = red[(0, 0)] + red[(1, 1)];
        let trace_sq = (&red * &red).trace();
        let red2 = nalgebra::Matrix2::new(red[(0, 0)], red[(0, 1)], red[(1, 0)], red[(1, 1)]);
        total_mean += (trace - 1.0) * 0.5 + d.norm_squared() * 0.5;
        total_var += (trace_sq - 0.5) * 0.5 + (d.transpose() * red2 * d)[(0, 0)];
    }
    (total_mean, total_var.max(0.0).sqrt())
}

/// Pure part and classical displacement covariance of a mixed state.
#[derive(Clone, Debug)]
pub struct NoiseSplit {
    pub q: CovarianceState,
    pub c: RMat,
}

/// `V = Q + C` with `Q = S Sᵀ/2` pure and `C = S diag(ν − 1/2) Sᵀ`.
pub fn split_noise(v_mixed: &CovarianceState) -> Result<NoiseSplit> {
    let w = williamson(v_mixed.covariance())?;
    let n = v_mixed.n_modes;
    let q = &w.s * w.s.transpose() * 0.5;
    let mut excess = RMat::zeros(2 * n, 2 * n);
    for (k, &nu) in w.nu.iter().enumerate() {
        excess[(k, k)] = (nu - 0.5).max(0.0);
        excess[(n + k, n + k)] = (nu - 0.5).max(0.0);
    }
    let c = &w.s * excess * w.s.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let q = CovarianceState::new((&q + q.transpose()) * 0.5, v_mixed.mean.clone())?;
    Ok(NoiseSplit { q, c })
}

/// A GBS circuit: single-mode squeezers followed by a passive interferometer.
#[derive(Clone, Debug)]
pub struct GbsInstance {
    pub squeezing: Vec<f64>,
    /// `a_j → Σ_k W_jk a_k` in the Heisenberg picture.
    pub unitary: CMat,
}

impl GbsInstance {
    /// Real orthogonal-symplectic form `[[Re W, −Im W], [Im W, Re W]]`.
    pub fn passive_symplectic(&self) -> RMat {
        passive_symplectic(&self.unitary)
    }

    pub fn covariance_state(&self) -> CovarianceState {
        let n = self.squeezing.len();
        let o = self.passive_symplectic();
        let mut d2 = RMat::zeros(2 * n, 2 * n);
        for (i, &r) in self.squeezing.iter().enumerate() {
            d2[(i, i)] = (-2.0 * r).exp();
            d2[(n + i, n + i)] = (2.0 * r).exp();
        }
        let v = &o * d2 * o.transpose() * 0.5;
        let v = (&v + v.transpose()) * 0.5;
        CovarianceState { n_modes: n, v, mean: vec![0.0; 2 * n] }
    }
}

pub fn passive_symplectic(w: &CMat) -> RMat {
    let n = w.nrows();
    let mut o = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = w[(i, j)];
            o[(i, j)] = z.re;
            o[(i, n + j)] = -z.im;
            o[(n + i, j)] = z.im;
            o[(n + i, n + j)] = z.re;
        }
    }
    o
}

/// Haar-random `n × n` unitary (QR of a complex Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let col = out.column(j) * ph;
        out.set_column(j, &col);
    }
    out
}

pub fn random_gbs_instance(n_modes: usize, squeeze_max: f64, seed: u64) -> GbsInstance {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let squeezing = (0..n_modes).map(|_| squeeze_max * rng.random::<f64>()).collect();
    let unitary = haar_unitary(n_modes, &mut rng);
    GbsInstance { squeezing, unitary }
}

/// `V = O D² Oᵀ / 2` with Haar-random passive `O` and `r_i ~ U[0, squeeze_max]`.
pub fn random_pure_covariance(n_modes: usize, squeeze_max: f64, seed: u64) -> CovarianceState {
    random_gbs_instance(n_modes, squeeze_max, seed).covariance_state()
}

/// Random symplectic matrix: passive · squeeze · passive.
pub fn random_symplectic(n_modes: usize, squeeze_max: f64, seed: u64) -> RMat {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let o1 = passive_symplectic(&haar_unitary(n_modes, &mut rng));
    let o2 = passive_symplectic(&haar_unitary(n_modes, &mut rng));
    let mut d = RMat::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        let r = squeeze_max * rng.random::<f64>();
        d[(i, i)] = (-r).exp();
        d[(n_modes + i, n_modes + i)] = r.exp();
    }
    o1 * d * o2
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &RMat) -> f64 {
    eigh_real(m).0.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff_real;

    #[test]
    fn williamson_of_thermal_is_identity() {
        let v = RMat::from_diagonal_element(2, 2, 0.7);
        let w = williamson(&v).unwrap();
        assert!((w.nu[0] - 0.7).abs() < 1e-12);
        assert!(max_abs_diff_real(&w.s, &RMat::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn williamson_of_squeezed_mode() {
        let r: f64 = 0.3;
        let v = RMat::from_row_slice(2, 2, &[(2.0 * r).exp() * 0.5, 0.0, 0.0, (-2.0 * r).exp() * 0.5]);
        let w = williamson(&v).unwrap();
        assert!((w.nu[0] - 0.5).abs() < 1e-12);
        let expect = RMat::from_row_slice(2, 2, &[r.exp(), 0.0, 0.0, (-r).exp()]);
        assert!(max_abs_diff_real(&w.s, &expect) < 1e-12);
    }

    #[test]
    fn williamson_roundtrip_random_symplectic() {
        for seed in 0..5 {
            let s0 = random_symplectic(1, 0.8, seed);
            let v = &s0 * RMat::from_diagonal_element(2, 2, 0.9) * s0.transpose();
            let w = williamson(&v).unwrap();
            assert!((w.nu[0] - 0.9).abs() < 1e-9);
            assert!(w.symplectic_residual() < 1e-9);
            assert!(max_abs_diff_real(&w.reconstruct(), &v) < 1e-9 * v.norm());
        }
    }

    #[test]
    fn williamson_rejects_singular() {
        let v = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(williamson(&v), Err(Error::NonPositiveDefinite { .. })));
    }

    #[test]
    fn williamson_sorted_multimode() {
        let s0 = random_symplectic(3, 0.6, 11);
        let nu = [1.3, 0.5, 0.8];
        let mut d = RMat::zeros(6, 6);
        for k in 0..3 {
            d[(k, k)] = nu[k];
            d[(3 + k, 3 + k)] = nu[k];
        }
        let v = &s0 * d * s0.transpose();
        let w = williamson(&v).unwrap();
        for (got, want) in w.nu.iter().zip([0.5, 0.8, 1.3]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!(w.symplectic_residual() < 1e-9);
        assert!(max_abs_diff_real(&w.reconstruct(), &v) < 1e-9 * v.norm());
    }

    #[test]
    fn random_pure_is_pure() {
        let state = random_pure_covariance(3, 1.0, 7);
        let nu = state.symplectic_eigenvalues().unwrap();
        assert!(nu.iter().all(|x| (x - 0.5).abs() < 1e-9), "{nu:?}");
    }

    #[test]
    fn unsqueezed_is_vacuum() {
        let state = random_pure_covariance(2, 0.0, 3);
        assert!(max_abs_diff_real(state.covariance(), &(RMat::identity(4, 4) * 0.5)) < 1e-14);
    }

    #[test]
    fn identity_passive_squeeze() {
        let inst = GbsInstance { squeezing: vec![0.5], unitary: CMat::identity(1, 1) };
        let v = inst.covariance_state();
        assert!((v.covariance()[(0, 0)] - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((v.covariance()[(1, 1)] - 1.0f64.exp() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_and_photons() {
        let vac = CovarianceState::vacuum(2);
        let red = reduced_covariance(&vac, 0).unwrap();
        assert!(max_abs_diff_real(&red, &(RMat::identity(2, 2) * 0.5)) < 1e-15);
        assert!(mean_photon(&vac, 1).unwrap() < 1e-14);
        assert!(reduced_covariance(&vac, 2).is_err());

        let r: f64 = 0.5;
        let tmsv = CovarianceState::two_mode_squeezed(r);
        let red = reduced_covariance(&tmsv, 0).unwrap();
        assert!((red[(0, 0)] - (2.0 * r).cosh() / 2.0).abs() < 1e-14);
        assert!(red[(0, 1)].abs() < 1e-14);
        assert!((mean_photon(&tmsv, 0).unwrap() - r.sinh().powi(2)).abs() < 1e-12);

        let th = CovarianceState::thermal(&[1.0]);
        assert!((mean_photon(&th, 0).unwrap() - 1.0).abs() < 1e-12);
        let (m, s) = photon_number_stats(&CovarianceState::thermal(&[1.0, 1.0]));
        assert!((m - 2.0).abs() < 1e-12);
        assert!((s - 2.0f64.sqrt() * 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(photon_number_stats(&CovarianceState::vacuum(4)), (0.0, 0.0));
    }

    #[test]
    fn split_noise_cases() {
        let pure = random_pure_covariance(2, 0.7, 1);
        let split = split_noise(&pure).unwrap();
        assert!(split.c.iter().all(|x| x.abs() < 1e-9));
        assert!(max_abs_diff_real(split.q.covariance(), pure.covariance()) < 1e-9);

        let th = CovarianceState::thermal(&[0.5]);
        let split = split_noise(&th).unwrap();
        assert!(max_abs_diff_real(split.q.covariance(), &(RMat::identity(2, 2) * 0.5)) < 1e-12);
        assert!(max_abs_diff_real(&split.c, &(RMat::identity(2, 2) * 0.5)) < 1e-12);

        let lossy = CovarianceState::two_mode_squeezed(0.6).with_loss(0, 0.5).with_loss(1, 0.5);
        let split = split_noise(&lossy).unwrap();
        assert!(split.q.is_pure(1e-9));
        assert!(max_abs_diff_real(&(split.q.covariance() + &split.c), lossy.covariance()) < 1e-9);
        assert!(min_eigenvalue(&split.c) > -1e-10);
    }

    #[test]
    fn json_roundtrip() {
        let s = random_pure_covariance(2, 0.4, 9);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"V\""));
        let back: CovarianceState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<CovarianceState>(r#"{"n_modes":1,"V":[[0.5]],"mean":[0,0]}"#).is_err());
    }
}
