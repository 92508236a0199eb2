//! Matrix product states.
//!
//! Site `i` holds one `dl × dr` matrix per physical index, so a state
//! amplitude is the product `A₀[n₀] A₁[n₁] ⋯`.

pub mod checkpoint;
pub mod dmrg;
pub mod lanczos;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, flat_index, multi_index, svd, CMat, CVec, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    /// `cores[i][s]` is the `dl × dr` matrix of site `i` and physical index `s`.
    pub cores: Vec<Vec<CMat>>,
    /// Orthogonality center, when the state is in mixed canonical form.
    pub center: Option<usize>,
}

/// Singular-value bookkeeping of a sequential SVD compression.
#[derive(Clone, Debug, Default)]
pub struct CompressionReport {
    /// Normalized squared Schmidt coefficients kept at every cut.
    pub kept: Vec<Vec<f64>>,
    /// Normalized squared Schmidt coefficients discarded at every cut.
    pub discarded: Vec<Vec<f64>>,
    /// `Σ_cuts (1 − Σ_kept σ²)`.
    pub eps_chi_surrogate: f64,
}

impl Mps {
    pub fn n_sites(&self) -> usize {
        self.cores.len()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.len()).collect()
    }

    /// Bond dimensions at the interior cuts.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores.iter().take(self.n_sites().saturating_sub(1)).map(|c| c[0].ncols()).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Product state from per-site vectors.
    pub fn product(vectors: &[CVec]) -> Self {
        let cores = vectors
            .iter()
            .map(|v| v.iter().map(|&z| CMat::from_element(1, 1, z)).collect())
            .collect();
        Self { cores, center: None }
    }

    /// Occupation-number basis state.
    pub fn basis_state(dims: &[usize], occ: &[usize]) -> Self {
        let vecs: Vec<CVec> = dims
            .iter()
            .zip(occ)
            .map(|(&d, &n)| {
                let mut v = CVec::zeros(d);
                v[n] = ONE;
                v
            })
            .collect();
        let mut m = Self::product(&vecs);
        m.center = Some(0);
        m
    }

    pub fn vacuum(dims: &[usize]) -> Self {
        Self::basis_state(dims, &vec![0; dims.len()])
    }

    /// Random normalized state with bonds capped at `chi`, in canonical form at site 0.
    pub fn random(dims: &[usize], chi: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = dims.len();
        let bonds = max_bonds(dims, chi);
        let mut cores = Vec::with_capacity(n);
        for i in 0..n {
            let dl = if i == 0 { 1 } else { bonds[i - 1] };
            let dr = if i + 1 == n { 1 } else { bonds[i] };
            let site = (0..dims[i])
                .map(|_| {
                    CMat::from_fn(dl, dr, |_, _| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        C64::new(re, im)
                    })
                })
                .collect();
            cores.push(site);
        }
        let mut m = Self { cores, center: None };
        m.canonicalize(0);
        m.normalize();
        m
    }

    /// Contracts to a dense vector, site 0 most significant.
    pub fn to_dense(&self) -> CVec {
        let dims = self.phys_dims();
        let total: usize = dims.iter().product();
        // partial[f] is the 1 × dr row for the prefix flat index f
        let mut partial: Vec<CMat> = vec![CMat::identity(1, 1)];
        for site in &self.cores {
            let mut next = Vec::with_capacity(partial.len() * site.len());
            for p in &partial {
                for a in site {
                    next.push(p * a);
                }
            }
            partial = next;
        }
        CVec::from_fn(total, |f, _| partial[f][(0, 0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        overlap(self, self).re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    /// Scales the state to unit norm (at the center when one is set).
    pub fn normalize(&mut self) -> f64 {
        let nrm = self.norm();
        if nrm > 0.0 {
            let site = self.center.unwrap_or(0);
            for a in &mut self.cores[site] {
                *a /= c(nrm);
            }
        }
        nrm
    }

    /// Left-orthonormalizes site `i` by QR and pushes `R` into site `i + 1`.
    pub fn left_orthonormalize(&mut self, i: usize) {
        let (q_blocks, r) = left_qr(&self.cores[i]);
        self.cores[i] = q_blocks;
        if i + 1 < self.n_sites() {
            for a in &mut self.cores[i + 1] {
                *a = &r * &*a;
            }
        } else {
            // the last site keeps the scalar norm
            let s = r[(0, 0)];
            for a in &mut self.cores[i] {
                *a *= s;
            }
        }
    }

    /// Right-orthonormalizes site `i` and pushes the remainder into site `i − 1`.
    pub fn right_orthonormalize(&mut self, i: usize) {
        let (q_blocks, l) = right_lq(&self.cores[i]);
        self.cores[i] = q_blocks;
        if i > 0 {
            for a in &mut self.cores[i - 1] {
                *a = &*a * &l;
            }
        } else {
            let s = l[(0, 0)];
            for a in &mut self.cores[i] {
                *a *= s;
            }
        }
    }

    /// Mixed canonical form with orthogonality center `center`.
    pub fn canonicalize(&mut self, center: usize) {
        let n = self.n_sites();
        assert!(center < n);
        for i in 0..center {
            self.left_orthonormalize(i);
        }
        for i in (center + 1..n).rev() {
            self.right_orthonormalize(i);
        }
        self.center = Some(center);
    }

    /// Largest deviation from the isometry conditions implied by `center`.
    pub fn isometry_residual(&self) -> f64 {
        let Some(center) = self.center else { return f64::INFINITY };
        let mut worst = 0.0f64;
        for (i, site) in self.cores.iter().enumerate() {
            if i == center {
                continue;
            }
            let g = if i < center {
                site.iter().fold(CMat::zeros(site[0].ncols(), site[0].ncols()), |acc, a| acc + a.adjoint() * a)
            } else {
                site.iter().fold(CMat::zeros(site[0].nrows(), site[0].nrows()), |acc, a| acc + a * a.adjoint())
            };
            let id = CMat::identity(g.nrows(), g.ncols());
            worst = worst.max(crate::linalg::max_abs_diff(&g, &id));
        }
        worst
    }

    /// Amplitude `⟨n|ψ⟩`.
    pub fn amplitude(&self, occ: &[usize]) -> Result<C64> {
        if occ.len() != self.n_sites() {
            return Err(Error::ShapeMismatch("occupation length".into()));
        }
        let mut acc = CMat::identity(1, 1);
        for (site, &n) in self.cores.iter().zip(occ) {
            if n >= site.len() {
                return Err(Error::IndexOutOfRange { index: n, len: site.len() });
            }
            acc *= &site[n];
        }
        Ok(acc[(0, 0)])
    }

    /// All amplitudes with total occupation at most `max_total`, lexicographic order.
    pub fn amplitudes_upto(&self, max_total: usize) -> Vec<(Vec<usize>, C64)> {
        let dims = self.phys_dims();
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<usize>, CMat)> = vec![(vec![], CMat::identity(1, 1))];
        while let Some((occ, acc)) = stack.pop() {
            let used: usize = occ.iter().sum();
            let i = occ.len();
            if i == dims.len() {
                out.push((occ, acc[(0, 0)]));
                continue;
            }
            for n in (0..dims[i].min(max_total - used + 1)).rev() {
                let mut o = occ.clone();
                o.push(n);
                stack.push((o, &acc * &self.cores[i][n]));
            }
        }
        out
    }

    /// Applies `mats[i]` (`d_out × d_in`) to the physical index of every site.
    pub fn apply_site_matrices(&self, mats: &[CMat]) -> Result<Mps> {
        if mats.len() != self.n_sites() {
            return Err(Error::ShapeMismatch("one matrix per site".into()));
        }
        let mut all_isometric = true;
        let mut cores = Vec::with_capacity(self.n_sites());
        for (site, u) in self.cores.iter().zip(mats) {
            if u.ncols() != site.len() {
                return Err(Error::ShapeMismatch(format!("matrix has {} columns, site has {}", u.ncols(), site.len())));
            }
            let gram = u.adjoint() * u;
            all_isometric &= crate::linalg::max_abs_diff(&gram, &CMat::identity(gram.nrows(), gram.ncols())) < 1e-12;
            let (dl, dr) = site[0].shape();
            let new: Vec<CMat> = (0..u.nrows())
                .map(|t| {
                    let mut acc = CMat::zeros(dl, dr);
                    for (s, a) in site.iter().enumerate() {
                        let w = u[(t, s)];
                        if w != ZERO {
                            acc += a * w;
                        }
                    }
                    acc
                })
                .collect();
            cores.push(new);
        }
        Ok(Mps { cores, center: if all_isometric { self.center } else { None } })
    }

    /// Grows every bond to `min(chi, maximal)` by padding with small random entries.
    pub fn expand_bonds(&mut self, chi: usize, noise: f64, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let dims = self.phys_dims();
        let target = max_bonds(&dims, chi);
        let n = self.n_sites();
        for cut in 0..n.saturating_sub(1) {
            let cur = self.cores[cut][0].ncols();
            let want = target[cut];
            if want <= cur {
                continue;
            }
            for a in &mut self.cores[cut] {
                let mut b = a.clone().resize_horizontally(want, ZERO);
                for r in 0..b.nrows() {
                    for col in cur..want {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        b[(r, col)] = c(noise * re);
                    }
                }
                *a = b;
            }
            for a in &mut self.cores[cut + 1] {
                let mut b = a.clone().resize_vertically(want, ZERO);
                for row in cur..want {
                    for col in 0..b.ncols() {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        b[(row, col)] = c(noise * re);
                    }
                }
                *a = b;
            }
        }
        self.center = None;
    }

    /// Singular values at every cut (computed on a canonicalized copy), descending.
    pub fn schmidt_values(&self) -> Vec<Vec<f64>> {
        let mut m = self.clone();
        m.canonicalize(0);
        let mut out = Vec::new();
        for i in 0..m.n_sites().saturating_sub(1) {
            let (u_blocks, s, vt) = split_left(&m.cores[i], usize::MAX, 0.0);
            m.cores[i] = u_blocks;
            let sv = CMat::from_diagonal(&CVec::from_iterator(s.len(), s.iter().map(|&x| c(x)))) * vt;
            for a in &mut m.cores[i + 1] {
                *a = &sv * &*a;
            }
            out.push(s);
        }
        out
    }
}

/// Largest meaningful bond at each cut given the physical dimensions.
pub fn max_bonds(dims: &[usize], chi: usize) -> Vec<usize> {
    let n = dims.len();
    (1..n)
        .map(|cut| {
            let left = dims[..cut].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
            let right = dims[cut..].iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
            chi.min(left).min(right)
        })
        .collect()
}

/// Stacks `[A_0; A_1; …]` into a `(d·dl) × dr` matrix.
pub(crate) fn stack_rows(site: &[CMat]) -> CMat {
    let (dl, dr) = site[0].shape();
    let mut m = CMat::zeros(site.len() * dl, dr);
    for (s, a) in site.iter().enumerate() {
        m.view_mut((s * dl, 0), (dl, dr)).copy_from(a);
    }
    m
}

/// Stacks `[A_0 A_1 …]` into a `dl × (d·dr)` matrix.
pub(crate) fn stack_cols(site: &[CMat]) -> CMat {
    let (dl, dr) = site[0].shape();
    let mut m = CMat::zeros(dl, site.len() * dr);
    for (s, a) in site.iter().enumerate() {
        m.view_mut((0, s * dr), (dl, dr)).copy_from(a);
    }
    m
}

pub(crate) fn unstack_rows(m: &CMat, d: usize) -> Vec<CMat> {
    let dl = m.nrows() / d;
    (0..d).map(|s| m.view((s * dl, 0), (dl, m.ncols())).into_owned()).collect()
}

pub(crate) fn unstack_cols(m: &CMat, d: usize) -> Vec<CMat> {
    let dr = m.ncols() / d;
    (0..d).map(|s| m.view((0, s * dr), (m.nrows(), dr)).into_owned()).collect()
}

fn left_qr(site: &[CMat]) -> (Vec<CMat>, CMat) {
    let m = stack_rows(site);
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    (unstack_rows(&q, site.len()), r)
}

fn right_lq(site: &[CMat]) -> (Vec<CMat>, CMat) {
    let m = stack_cols(site);
    let qr = m.adjoint().qr();
    let (q, r) = (qr.q(), qr.r());
    (unstack_cols(&q.adjoint(), site.len()), r.adjoint())
}

/// Truncated SVD of a site viewed as `(d·dl) × dr`: returns `U` blocks, kept `s`, `Vᵗ`.
///
/// Keeps at most `chi` values and drops those below `cutoff · s_max`.
pub(crate) fn split_left(site: &[CMat], chi: usize, cutoff: f64) -> (Vec<CMat>, Vec<f64>, CMat) {
    let m = stack_rows(site);
    let (u, s, vt) = svd(&m);
    let keep = kept_count(&s, chi, cutoff);
    (
        unstack_rows(&u.columns(0, keep).into_owned(), site.len()),
        s[..keep].to_vec(),
        vt.rows(0, keep).into_owned(),
    )
}

pub(crate) fn kept_count(s: &[f64], chi: usize, cutoff: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    let mut keep = s.iter().take(chi).take_while(|&&x| x > cutoff * smax).count();
    if keep == 0 && !s.is_empty() {
        keep = 1;
    }
    keep
}

/// `⟨a|b⟩` by transfer-matrix contraction.
pub fn overlap(a: &Mps, b: &Mps) -> C64 {
    assert_eq!(a.phys_dims(), b.phys_dims(), "incompatible physical dimensions");
    let mut env = CMat::identity(1, 1);
    for (sa, sb) in a.cores.iter().zip(&b.cores) {
        let mut next = CMat::zeros(sa[0].ncols(), sb[0].ncols());
        for (x, y) in sa.iter().zip(sb) {
            next += x.adjoint() * &env * y;
        }
        env = next;
    }
    env[(0, 0)]
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn normalized_fidelity(a: &Mps, b: &Mps) -> f64 {
    let o = overlap(a, b).norm_sqr();
    o / (a.norm_sqr() * b.norm_sqr())
}

/// Sequential left-to-right SVD compression of a dense state.
pub fn from_dense(psi: &CVec, dims: &[usize], chi_max: usize) -> Result<(Mps, CompressionReport)> {
    let total: usize = dims.iter().product();
    if psi.len() != total {
        return Err(Error::ShapeMismatch(format!("state has {} entries, dims give {total}", psi.len())));
    }
    let n = dims.len();
    let mut report = CompressionReport::default();
    let mut cores = Vec::with_capacity(n);
    // rest is (bond · d_i · … · d_N) laid out as rows = bond, cols = remaining
    let mut rest = CMat::from_fn(1, total, |_, j| psi[j]);
    for i in 0..n {
        let bond = rest.nrows();
        let d = dims[i];
        let right: usize = dims[i + 1..].iter().product();
        if i + 1 == n {
            let site = (0..d).map(|s| CMat::from_fn(bond, 1, |l, _| rest[(l, s)])).collect();
            cores.push(site);
            break;
        }
        // reshape to (bond · d) × right with row index s·bond + l
        let m = CMat::from_fn(d * bond, right, |row, col| {
            let (s, l) = (row / bond, row % bond);
            rest[(l, s * right + col)]
        });
        let (u, s, vt) = svd(&m);
        let norm2: f64 = s.iter().map(|x| x * x).sum();
        let keep = kept_count(&s, chi_max, 0.0).min(s.len());
        let keep = keep.max(1);
        let weights: Vec<f64> = s.iter().map(|x| if norm2 > 0.0 { x * x / norm2 } else { 0.0 }).collect();
        report.kept.push(weights[..keep].to_vec());
        report.discarded.push(weights[keep..].to_vec());
        report.eps_chi_surrogate += weights[keep..].iter().sum::<f64>();
        cores.push(unstack_rows(&u.columns(0, keep).into_owned(), d));
        let sv = CMat::from_diagonal(&CVec::from_iterator(keep, s[..keep].iter().map(|&x| c(x))));
        rest = sv * vt.rows(0, keep);
    }
    Ok((Mps { cores, center: Some(n - 1) }, report))
}

/// Embeds a dense vector exactly (no truncation).
pub fn from_dense_exact(psi: &CVec, dims: &[usize]) -> Mps {
    from_dense(psi, dims, usize::MAX).expect("dims consistent").0
}

/// Enumerates all occupations of `dims` in row-major order.
pub fn all_occupations(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |f| multi_index(f, dims))
}

pub fn flat(occ: &[usize], dims: &[usize]) -> usize {
    flat_index(occ, dims)
}
