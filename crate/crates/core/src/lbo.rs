//! Optimal local bases for Gaussian targets.
//!
//! Every mode's reduced covariance is brought to thermal form by a local
//! Gaussian unitary; in that basis the reduced density matrix is diagonal
//! with geometric weights, which fixes the truncation error analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{effective_cutoff, gram_residual, plbo_unitary_matrix, BasisParams};
use crate::gaussian::{reduced_covariance, williamson, CovarianceState};
use crate::linalg::{CMat, RMat};
use crate::mpo::Basis;
use crate::oracle::gaussian_pure_amplitudes;

/// Gram tolerance used when locating effective cutoffs.
pub const CUTOFF_TOL: f64 = 1e-10;
/// Largest Fock dimension searched for an effective cutoff.
pub const CUTOFF_SEARCH_MAX: usize = 512;

/// Squared Schmidt weight `n̄ᵏ / (n̄ + 1)^{k+1}` of level `k`.
pub fn level_weight(nbar: f64, k: usize) -> f64 {
    (nbar / (nbar + 1.0)).powi(k as i32) / (nbar + 1.0)
}

/// Weight outside the lowest `d` levels, `(n̄ / (n̄ + 1))^d`.
pub fn discarded_weight(nbar: f64, d: usize) -> f64 {
    if nbar <= 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    (nbar / (nbar + 1.0)).powi(d as i32)
}

/// How the kept dimension of each mode is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimChoice {
    Uniform(usize),
    PerMode(Vec<usize>),
    /// Smallest `d` per mode whose discarded weight is at most the target.
    Threshold(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModePlan {
    /// Heisenberg action on `(X, P)` of the local basis change.
    pub s: [[f64; 2]; 2],
    pub nbar: f64,
    pub d: usize,
    /// The basis change written as gate parameters.
    pub params: BasisParams,
    pub effective_cutoff: usize,
    pub discarded: f64,
    /// `⟨n|𝒲|m⟩` at the effective cutoff, `effective_cutoff × d`.
    #[serde(skip)]
    pub u: CMat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalBasisPlan {
    pub modes: Vec<ModePlan>,
    /// Mean per-mode discarded weight.
    pub eps: f64,
}

impl LocalBasisPlan {
    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.d).collect()
    }

    pub fn basis(&self) -> Basis {
        Basis::Olb(self.modes.iter().map(|m| m.s).collect())
    }

    pub fn effective_cutoffs(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.effective_cutoff).collect()
    }

    /// `⊕ S_i` in XXPP ordering.
    pub fn local_symplectic(&self) -> RMat {
        let n = self.modes.len();
        let mut big = RMat::zeros(2 * n, 2 * n);
        for (i, m) in self.modes.iter().enumerate() {
            big[(i, i)] = m.s[0][0];
            big[(i, n + i)] = m.s[0][1];
            big[(n + i, i)] = m.s[1][0];
            big[(n + i, n + i)] = m.s[1][1];
        }
        big
    }
}

fn rot(t: f64) -> RMat {
    RMat::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
}

fn angle(m: &RMat) -> f64 {
    m[(1, 0)].atan2(m[(0, 0)])
}

/// Writes a 2×2 symplectic matrix as `R(θ₁) diag(e^{−r}, e^{r}) R(θ₂)` with `r ≥ 0`.
pub fn decompose_symplectic(s: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let m = RMat::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]]);
    let svd = m.svd(true, true);
    let mut w = svd.u.expect("u");
    let mut vt = svd.v_t.expect("v_t");
    let sig = svd.singular_values;
    let (big, small) = if sig[0] >= sig[1] { (0, 1) } else { (1, 0) };
    if big != 0 {
        w.swap_columns(0, 1);
        vt.swap_rows(0, 1);
    }
    if w.determinant() < 0.0 {
        w.column_mut(1).neg_mut();
        vt.row_mut(1).neg_mut();
    }
    let r = (sig[big] / sig[small]).ln() / 2.0;
    // diag(σ₁, σ₂) = R(π/2) diag(σ₂, σ₁) R(−π/2)
    let half = std::f64::consts::FRAC_PI_2;
    let left = &w * rot(half);
    let right = rot(-half) * &vt;
    (angle(&left), r, angle(&right))
}

/// Gate parameters of `D(α) R(θ₁) S(r) R(θ₂)` with Heisenberg action `z → S z + μ`.
pub fn basis_params(s: [[f64; 2]; 2], mean: (f64, f64)) -> BasisParams {
    let (t1, r, t2) = decompose_symplectic(s);
    // R(θ₁) S(r) R(θ₂) = S(r e^{2iθ₁}) R(θ₁ + θ₂)
    BasisParams {
        alpha_x: mean.0 * std::f64::consts::FRAC_1_SQRT_2,
        alpha_p: mean.1 * std::f64::consts::FRAC_1_SQRT_2,
        r,
        phi: if r == 0.0 { 0.0 } else { 2.0 * t1 },
        theta: if r == 0.0 { angle(&(rot(t1) * rot(t2))) } else { t1 + t2 },
        ..BasisParams::default()
    }
}

fn choose_d(choice: &DimChoice, mode: usize, nbar: f64) -> Result<usize> {
    let d = match choice {
        DimChoice::Uniform(d) => *d,
        DimChoice::PerMode(v) => *v.get(mode).ok_or(Error::IndexOutOfRange { index: mode, len: v.len() })?,
        DimChoice::Threshold(target) => {
            if !(*target > 0.0 && *target < 1.0) {
                return Err(Error::InvalidInput("threshold must lie in (0, 1)".into()));
            }
            let mut d = 1;
            while discarded_weight(nbar, d) > *target {
                d += 1;
            }
            d
        }
    };
    if d == 0 {
        return Err(Error::InvalidInput("kept dimension must be positive".into()));
    }
    Ok(d)
}

/// Per-mode Williamson decomposition and basis-change matrices.
pub fn plan_optimal_basis(state: &CovarianceState, choice: &DimChoice) -> Result<LocalBasisPlan> {
    let n = state.n_modes();
    let mut modes = Vec::with_capacity(n);
    for i in 0..n {
        let red = reduced_covariance(state, i)?;
        let w = williamson(&red)?;
        let s = [[w.s[(0, 0)], w.s[(0, 1)]], [w.s[(1, 0)], w.s[(1, 1)]]];
        // roundoff on pure modes is snapped to zero occupation
        let nbar = if w.nu[0] - 0.5 < 1e-12 { 0.0 } else { w.nu[0] - 0.5 };
        let d = choose_d(choice, i, nbar)?;
        let params = basis_params(s, state.mode_mean(i));
        let eff = effective_cutoff(&params, d, CUTOFF_TOL, CUTOFF_SEARCH_MAX)?;
        let u = plbo_unitary_matrix(&params, eff, d, eff.max(16));
        modes.push(ModePlan { s, nbar, d, params, effective_cutoff: eff, discarded: discarded_weight(nbar, d), u });
    }
    let eps = modes.iter().map(|m| m.discarded).sum::<f64>() / n as f64;
    Ok(LocalBasisPlan { modes, eps })
}

/// `U_i` as `d_out × d_i` isometries.
pub fn inverse_basis_matrices(plan: &LocalBasisPlan, d_out: usize) -> Result<Vec<CMat>> {
    plan.modes
        .iter()
        .map(|m| {
            if d_out < m.effective_cutoff {
                return Err(Error::CutoffNotReached { d_max: d_out });
            }
            let u = plbo_unitary_matrix(&m.params, d_out, m.d, d_out.max(16));
            let res = gram_residual(&u, d_out);
            if res > 1e-9 {
                return Err(Error::Integrity { deviation: res });
            }
            Ok(u)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    /// Exact weight of the target outside the kept subspace.
    pub eps_d: f64,
    pub eps: f64,
    /// `ε / ε_D`, between `1/N` and 1.
    pub ratio: f64,
}

/// Exact truncation error of a pure target in its optimal basis.
pub fn truncation_bound_check(state: &CovarianceState, plan: &LocalBasisPlan) -> Result<TruncationCheck> {
    let n = state.n_modes();
    if plan.modes.len() != n {
        return Err(Error::ShapeMismatch("plan and state mode counts differ".into()));
    }
    let sinv = plan
        .local_symplectic()
        .try_inverse()
        .ok_or(Error::InvalidInput("local symplectic not invertible".into()))?;
    let v = &sinv * state.covariance() * sinv.transpose();
    let local = CovarianceState::new((&v + v.transpose()) * 0.5, vec![0.0; 2 * n])?;
    let dims = plan.dims();
    let amps = gaussian_pure_amplitudes(&local, &dims)?;
    let kept: f64 = amps.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let eps_d = (1.0 - kept).max(0.0);
    let ratio = if eps_d > 0.0 { plan.eps / eps_d } else { 1.0 };
    Ok(TruncationCheck { eps_d, eps: plan.eps, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{squeezed_vacuum_amplitudes, QuadratureSet};
    use crate::gaussian::{random_pure_covariance, random_symplectic};
    use crate::linalg::max_abs_diff;

    #[test]
    fn weights_and_tail() {
        for nbar in [0.0, 0.3, 1.0, 4.0] {
            let head: f64 = (0..6).map(|k| level_weight(nbar, k)).sum();
            assert!((1.0 - head - discarded_weight(nbar, 6)).abs() < 1e-14);
        }
        assert!((discarded_weight(1.0, 3) - 0.125).abs() < 1e-15);
        assert_eq!(discarded_weight(0.0, 1), 0.0);
    }

    #[test]
    fn decomposition_reconstructs() {
        for seed in 0..10 {
            let big = random_symplectic(1, 0.8, seed);
            let s = [[big[(0, 0)], big[(0, 1)]], [big[(1, 0)], big[(1, 1)]]];
            let (t1, r, t2) = decompose_symplectic(s);
            let back = rot(t1) * RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![(-r).exp(), r.exp()])) * rot(t2);
            let m = RMat::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]]);
            assert!((back - m).abs().max() < 1e-12);
            assert!(r >= 0.0);
        }
    }

    #[test]
    fn gate_form_matches_linear_quadratures() {
        for seed in 0..5 {
            let big = random_symplectic(1, 0.5, seed + 20);
            let s = [[big[(0, 0)], big[(0, 1)]], [big[(1, 0)], big[(1, 1)]]];
            let mean = (0.3, -0.2);
            let a = QuadratureSet::linear(s, mean, 12);
            let b = QuadratureSet::plbo(&basis_params(s, mean), 12);
            assert!(max_abs_diff(&a.x, &b.x) < 1e-9 && max_abs_diff(&a.p, &b.p) < 1e-9);
        }
    }

    #[test]
    fn vacuum_plan_is_trivial() {
        let plan = plan_optimal_basis(&CovarianceState::vacuum(2), &DimChoice::Uniform(1)).unwrap();
        assert_eq!(plan.eps, 0.0);
        assert_eq!(plan.effective_cutoffs(), vec![1, 1]);
        let u = inverse_basis_matrices(&plan, 4).unwrap();
        assert_eq!(u[0][(0, 0)].re, 1.0);
    }

    #[test]
    fn squeezed_column_is_squeezed_vacuum() {
        let st = CovarianceState::squeezed_product(&[0.6]);
        let plan = plan_optimal_basis(&st, &DimChoice::Uniform(1)).unwrap();
        let d_out = plan.modes[0].effective_cutoff;
        let u = inverse_basis_matrices(&plan, d_out).unwrap();
        let want = squeezed_vacuum_amplitudes(0.6, d_out);
        let phase = want[0] / u[0][(0, 0)];
        for k in 0..d_out {
            assert!((u[0][(k, 0)] * phase - want[k]).norm() < 1e-8);
        }
        assert!(inverse_basis_matrices(&plan, 4).is_err());
    }

    #[test]
    fn bound_holds_on_random_states() {
        for seed in 0..4 {
            let st = random_pure_covariance(3, 0.4, seed);
            for d in 1..4 {
                let plan = plan_optimal_basis(&st, &DimChoice::Uniform(d)).unwrap();
                let chk = truncation_bound_check(&st, &plan).unwrap();
                assert!(chk.eps <= chk.eps_d + 1e-12 && chk.eps_d <= 3.0 * chk.eps + 1e-12, "{chk:?}");
            }
        }
    }

    #[test]
    fn threshold_choice() {
        let st = CovarianceState::thermal(&[1.0]);
        let plan = plan_optimal_basis(&st, &DimChoice::Threshold(0.1)).unwrap();
        assert_eq!(plan.modes[0].d, 4);
        assert!((plan.modes[0].nbar - 1.0).abs() < 1e-12);
    }
}
