//! Smallest eigenpair of a Hermitian operator given as a matrix-vector product.

use nalgebra::DMatrix;

use crate::linalg::{c, CVec, C64};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Residual norm `‖Hx − λx‖` at which the eigenpair is accepted.
    pub tol: f64,
    /// Total matrix-vector products allowed over all restarts.
    pub max_iter: usize,
    /// Krylov dimension per restart.
    pub krylov: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, krylov: 32 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: CVec,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Restarted Lanczos with full reorthogonalization, warm-started from `start`.
pub fn lowest_eigenpair(apply: impl Fn(&CVec) -> CVec, start: &CVec, opts: LanczosOptions) -> Eigenpair {
    let n = start.len();
    let mut x = start.clone();
    let norm = x.norm();
    if !(norm.is_finite() && norm > 0.0) {
        x = CVec::from_fn(n, |i, _| c(1.0 + (i as f64 * 0.618).fract()));
    }
    x /= c(x.norm());

    let mut used = 0;
    let mut best = Eigenpair { value: f64::INFINITY, vector: x.clone(), residual: f64::INFINITY, converged: false, iterations: 0 };
    while used < opts.max_iter {
        let budget = opts.krylov.min(n).min(opts.max_iter - used).max(1);
        let mut basis: Vec<CVec> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..budget {
            let mut w = apply(&basis[j]);
            used += 1;
            let a = basis[j].dotc(&w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let proj = v.dotc(&w);
                    w.axpy(-proj, v, c(1.0));
                }
            }
            let b = w.norm();
            if j + 1 == budget || b < 1e-14 {
                break;
            }
            beta.push(b);
            basis.push(w / c(b));
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tridiagonal");
        let mut ritz = CVec::zeros(n);
        for (i, v) in basis.iter().take(m).enumerate() {
            ritz.axpy(c(eig.eigenvectors[(i, k)]), v, c(1.0));
        }
        ritz /= c(ritz.norm());
        let hr = apply(&ritz);
        used += 1;
        let value = ritz.dotc(&hr).re;
        let residual = (&hr - &ritz * C64::new(value, 0.0)).norm();
        let _ = theta;
        if value <= best.value || residual < best.residual {
            best = Eigenpair { value, vector: ritz.clone(), residual, converged: residual < opts.tol, iterations: used };
        }
        if residual < opts.tol {
            best.converged = true;
            best.iterations = used;
            return best;
        }
        x = ritz;
    }
    best.iterations = used;
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, CMat};

    #[test]
    fn finds_lowest_of_random_hermitian() {
        let n = 60;
        let m = CMat::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 2.0));
        let h = &m + m.adjoint();
        let (vals, _) = eigh(&h);
        let start = CVec::from_element(n, c(1.0));
        let res = lowest_eigenpair(|v| &h * v, &start, LanczosOptions { tol: 1e-9, max_iter: 2000, krylov: 40 });
        assert!(res.converged);
        assert!((res.value - vals[0]).abs() < 1e-9);
    }

    #[test]
    fn tiny_problem_and_invariant_start() {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0), c(-1.0), c(3.0)]));
        let mut start = CVec::zeros(3);
        start[1] = c(1.0);
        let res = lowest_eigenpair(|v| &h * v, &start, LanczosOptions::default());
        assert!(res.converged && (res.value + 1.0).abs() < 1e-14);
    }
}
