//! Dense linear-algebra helpers shared by the engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Thin SVD `m = u · diag(s) · vt` with singular values descending.
///
/// Gauge: the first component of each left singular vector whose magnitude
/// exceeds 1e-12 is made real-positive; the matching row of `vt` absorbs
/// the conjugate phase so the product is unchanged.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (CMat::zeros(rows, 0), vec![], CMat::zeros(0, cols));
    }
    let dec = m.clone().svd(true, true);
    let u_raw = dec.u.expect("requested u");
    let vt_raw = dec.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let mut u = CMat::zeros(rows, k);
    let mut vt = CMat::zeros(k, cols);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u_raw.column(src).into_owned();
        let mut vrow = vt_raw.row(src).into_owned();
        if let Some(lead) = ucol.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = lead / lead.norm();
            ucol *= phase.conj();
            vrow *= phase;
        }
        u.set_column(dst, &ucol);
        vt.set_row(dst, &vrow);
        s.push(dec.singular_values[src]);
    }
    (u, s, vt)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn max_abs_diff_real(a: &RMat, b: &RMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Top-left `rows × cols` block as an owned matrix.
pub fn top_left(m: &CMat, rows: usize, cols: usize) -> CMat {
    m.view((0, 0), (rows, cols)).into_owned()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(c)
}

/// The standard symplectic form `[[0, I], [-I, 0]]` in XXPP ordering.
pub fn symplectic_form(n: usize) -> RMat {
    let mut om = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        om[(i, n + i)] = 1.0;
        om[(n + i, i)] = -1.0;
    }
    om
}

/// Symmetric square root and inverse square root of a real positive definite matrix.
pub fn sqrtm_pd(m: &RMat) -> (RMat, RMat, f64) {
    let (vals, vecs) = eigh_real(m);
    let min = vals.first().copied().unwrap_or(0.0);
    let n = m.nrows();
    let mut sq = RMat::zeros(n, n);
    let mut isq = RMat::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let col = vecs.column(k);
        let outer = col * col.transpose();
        let root = lam.max(0.0).sqrt();
        sq += &outer * root;
        if root > 0.0 {
            isq += outer / root;
        }
    }
    (sq, isq, min)
}

/// Row-major tensor-product index of a multi-index over per-site dimensions.
pub fn flat_index(occ: &[usize], dims: &[usize]) -> usize {
    occ.iter().zip(dims).fold(0, |acc, (&n, &d)| acc * d + n)
}

/// Inverse of [`flat_index`].
pub fn multi_index(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut occ = vec![0; dims.len()];
    for (slot, &d) in occ.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    occ
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let m = CMat::from_fn(3, 4, |i, j| C64::new((i * 4 + j) as f64 * 0.3 - 1.0, (i as f64) - 0.5 * j as f64));
        let (u, s, vt) = svd(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let sd = CMat::from_diagonal(&CVec::from_iterator(s.len(), s.iter().map(|&x| c(x))));
        assert!(max_abs_diff(&(&u * sd * &vt), &m) < 1e-12);
        for k in 0..s.len() {
            let lead = u.column(k).iter().find(|z| z.norm() > 1e-12).copied().unwrap();
            assert!(lead.im.abs() < 1e-12 && lead.re > 0.0);
        }
    }

    #[test]
    fn index_roundtrip() {
        let dims = [3, 2, 4];
        for f in 0..24 {
            assert_eq!(flat_index(&multi_index(f, &dims), &dims), f);
        }
    }

    #[test]
    fn expm_of_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![I * 0.3, c(-1.0)]));
        let e = expm(&m);
        assert!((e[(0, 0)] - (I * 0.3).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c((-1.0f64).exp())).norm() < 1e-14);
    }
}
