//! Truncated Fock-space operator algebra.
//!
//! Operators are represented on the span of `|0⟩ … |D−1⟩` with the
//! convention `a|n⟩ = √n |n−1⟩`. Products of ladder operators are built at a
//! padded dimension and then cropped, which keeps every retained entry equal
//! to the infinite-dimensional matrix element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, expm, top_left, CMat, C64, I, ONE, ZERO};

/// Padding used for polynomial ladder products (degree at most four).
pub const PRODUCT_PAD: usize = 4;

/// A labelled `D × D` single-mode operator.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    pub dim: usize,
    pub data: CMat,
    pub label: String,
}

impl TruncatedOperator {
    pub fn new(data: CMat, label: impl Into<String>) -> Self {
        Self { dim: data.nrows(), data, label: label.into() }
    }
}

/// Annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

pub fn number(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == j { c(i as f64) } else { ZERO })
}

/// Diagonal matrix `f(n)` for `n = 0 … dim−1`.
pub fn diag_fn(dim: usize, f: impl Fn(f64) -> C64) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == j { f(i as f64) } else { ZERO })
}

pub fn quadrature_x(dim: usize) -> CMat {
    let a = annihilation(dim);
    (&a + a.adjoint()) * c(std::f64::consts::FRAC_1_SQRT_2)
}

pub fn quadrature_p(dim: usize) -> CMat {
    let a = annihilation(dim);
    (&a - a.adjoint()) * (-I * std::f64::consts::FRAC_1_SQRT_2)
}

/// The basic single-mode operators at cutoff `dim`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: TruncatedOperator,
    pub adag: TruncatedOperator,
    pub x: TruncatedOperator,
    pub p: TruncatedOperator,
    pub n: TruncatedOperator,
}

pub fn ladder(dim: usize) -> Ladder {
    assert!(dim >= 2, "cutoff must be at least 2");
    let a = annihilation(dim);
    Ladder {
        adag: TruncatedOperator::new(a.adjoint(), "adag"),
        x: TruncatedOperator::new(quadrature_x(dim), "x"),
        p: TruncatedOperator::new(quadrature_p(dim), "p"),
        n: TruncatedOperator::new(number(dim), "n"),
        a: TruncatedOperator::new(a, "a"),
    }
}

/// A letter in a ladder word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    A,
    Adag,
    X,
    P,
}

impl Letter {
    fn matrix(self, dim: usize) -> CMat {
        match self {
            Letter::A => annihilation(dim),
            Letter::Adag => annihilation(dim).adjoint(),
            Letter::X => quadrature_x(dim),
            Letter::P => quadrature_p(dim),
        }
    }
}

/// A linear combination of ladder words, e.g. `XP + PX`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LadderExpr {
    pub terms: Vec<(C64, Vec<Letter>)>,
}

impl LadderExpr {
    pub fn identity() -> Self {
        Self { terms: vec![(ONE, vec![])] }
    }

    pub fn word(letters: &[Letter]) -> Self {
        Self { terms: vec![(ONE, letters.to_vec())] }
    }

    pub fn letter(l: Letter) -> Self {
        Self::word(&[l])
    }

    pub fn scale(mut self, s: C64) -> Self {
        for t in &mut self.terms {
            t.0 *= s;
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.1.len()).max().unwrap_or(0)
    }
}

impl std::ops::Add for LadderExpr {
    type Output = LadderExpr;
    fn add(mut self, rhs: LadderExpr) -> LadderExpr {
        self.terms.extend(rhs.terms);
        self
    }
}

impl std::ops::Mul for LadderExpr {
    type Output = LadderExpr;
    fn mul(self, rhs: LadderExpr) -> LadderExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ca, wa) in &self.terms {
            for (cb, wb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                terms.push((ca * cb, w));
            }
        }
        LadderExpr { terms }
    }
}

/// Evaluates `expr` at `dim + 4` and crops to `dim × dim`.
pub fn padded_product(dim: usize, expr: &LadderExpr) -> Result<TruncatedOperator> {
    let degree = expr.degree();
    if degree > 4 {
        return Err(Error::DegreeTooHigh { degree });
    }
    let big = dim + PRODUCT_PAD;
    let mut acc = CMat::zeros(big, big);
    for (coef, word) in &expr.terms {
        let mut m = CMat::identity(big, big);
        for l in word {
            m *= l.matrix(big);
        }
        acc += m * *coef;
    }
    Ok(TruncatedOperator::new(top_left(&acc, dim, dim), "product"))
}

/// Single-mode gates of the local basis circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// `exp(α a† − α* a)` with `α = re + i·im`.
    Displacement { re: f64, im: f64 },
    /// `exp((z* a² − z a†²)/2)` with `z = r e^{iφ}`.
    Squeeze { r: f64, phi: f64 },
    /// `exp(iθ n)`.
    Rotation { theta: f64 },
    /// `exp(i s X²/2)`.
    QuadraticPhase { s: f64 },
    /// `exp(iγ (a + a†)³ / 6)`, i.e. `exp(i √2 γ X³ / 3)`.
    CubicPhase { gamma: f64 },
    /// `exp(iκ n²)`.
    Kerr { kappa: f64 },
}

/// Anti-Hermitian generator of `gate` at dimension `dim`.
fn generator(gate: Gate, dim: usize) -> CMat {
    let a = annihilation(dim);
    let ad = a.adjoint();
    match gate {
        Gate::Displacement { re, im } => {
            let alpha = C64::new(re, im);
            &ad * alpha - &a * alpha.conj()
        }
        Gate::Squeeze { r, phi } => {
            let z = C64::from_polar(r, phi);
            (&a * &a * z.conj() - &ad * &ad * z) * c(0.5)
        }
        Gate::Rotation { theta } => diag_fn(dim, |n| I * theta * n),
        Gate::QuadraticPhase { s } => {
            let x = quadrature_x(dim);
            &x * &x * (I * (s / 2.0))
        }
        Gate::CubicPhase { gamma } => {
            let q = &a + &ad;
            &q * &q * &q * (I * (gamma / 6.0))
        }
        Gate::Kerr { kappa } => diag_fn(dim, |n| I * kappa * n * n),
    }
}

/// Truncated gate unitary: exponential at `dim + pad`, cropped to `dim`.
pub fn gate_matrix(gate: Gate, dim: usize, pad: usize) -> TruncatedOperator {
    let big = dim + pad;
    let u = match gate {
        Gate::Rotation { theta } => diag_fn(big, |n| (I * theta * n).exp()),
        Gate::Kerr { kappa } => diag_fn(big, |n| (I * kappa * n * n).exp()),
        _ => expm(&generator(gate, big)),
    };
    TruncatedOperator::new(top_left(&u, dim, dim), format!("{gate:?}"))
}

/// Parameters of the six-gate local basis circuit of one mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
    pub s: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl BasisParams {
    pub const LEN: usize = 8;

    pub fn to_array(&self) -> [f64; 8] {
        [self.alpha_x, self.alpha_p, self.r, self.phi, self.theta, self.s, self.gamma, self.kappa]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self { alpha_x: v[0], alpha_p: v[1], r: v[2], phi: v[3], theta: v[4], s: v[5], gamma: v[6], kappa: v[7] }
    }

    pub fn is_identity(&self) -> bool {
        self.to_array().iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Gates of `𝒰 = D(α) S(z) R(θ) P₂(s) P₃(γ) K(κ)`, leftmost first.
    pub fn gates(&self) -> [Gate; 6] {
        [
            Gate::Displacement { re: self.alpha_x, im: self.alpha_p },
            Gate::Squeeze { r: self.r, phi: self.phi },
            Gate::Rotation { theta: self.theta },
            Gate::QuadraticPhase { s: self.s },
            Gate::CubicPhase { gamma: self.gamma },
            Gate::Kerr { kappa: self.kappa },
        ]
    }
}

/// `⟨n|𝒰|m⟩` for `n < d_out`, `m < d_in`; gates are composed at `d_out + pad`.
pub fn plbo_unitary_matrix(params: &BasisParams, d_out: usize, d_in: usize, pad: usize) -> CMat {
    assert!(d_out >= d_in, "d_out must be at least d_in");
    let big = d_out + pad;
    let mut u = CMat::identity(big, big);
    for gate in params.gates() {
        let is_trivial = match gate {
            Gate::Displacement { re, im } => re == 0.0 && im == 0.0,
            Gate::Squeeze { r, .. } => r == 0.0,
            Gate::Rotation { theta } => theta == 0.0,
            Gate::QuadraticPhase { s } => s == 0.0,
            Gate::CubicPhase { gamma } => gamma == 0.0,
            Gate::Kerr { kappa } => kappa == 0.0,
        };
        if !is_trivial {
            u *= gate_matrix(gate, big, 0).data;
        }
    }
    top_left(&u, d_out, d_in)
}

/// `A = 𝒰† a 𝒰` evaluated in closed form at dimension `dim`.
///
/// Every term is normal ordered (`a f(n)`, `f(n) a†`, `a² f(n)`, `f(n) a†²`),
/// so the result is exact on all retained entries.
pub fn transformed_ladder(params: &BasisParams, dim: usize) -> TruncatedOperator {
    TruncatedOperator::new(transformed_ladder_matrix(params, dim), "A")
}

pub(crate) fn transformed_ladder_matrix(p: &BasisParams, dim: usize) -> CMat {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let k = p.kappa;
    let hs = p.s / 2.0;
    let e_t = C64::from_polar(1.0, p.theta);
    let e_ft = C64::from_polar(1.0, p.phi - p.theta);
    let (ch, sh) = (p.r.cosh(), p.r.sinh());
    let c1 = (ONE + I * hs) * e_t * ch + I * hs * e_ft * sh;
    let c2 = (ONE - I * hs) * e_ft * sh - I * hs * e_t * ch;
    let g = I * (p.gamma / 2.0) * (e_t * ch + e_ft * sh);

    let ph_a = diag_fn(dim, |n| (I * k * (2.0 * n - 1.0)).exp());
    let ph_ad = diag_fn(dim, |n| (-I * k * (2.0 * n - 1.0)).exp());
    let ph_aa = diag_fn(dim, |n| (I * 4.0 * k * (n - 1.0)).exp());
    let ph_adad = diag_fn(dim, |n| (-I * 4.0 * k * (n - 1.0)).exp());

    let mut out = &a * ph_a * c1 - ph_ad * &ad * c2;
    if p.gamma != 0.0 {
        let quad = diag_fn(dim, |n| c(2.0 * n + 1.0)) + &a * &a * ph_aa + ph_adad * &ad * &ad;
        out += quad * g;
    }
    let alpha = C64::new(p.alpha_x, p.alpha_p);
    for i in 0..dim {
        out[(i, i)] += alpha;
    }
    out
}

/// Max-abs deviation of the Gram matrix of the first `rows` rows of `u` from identity.
pub fn gram_residual(u: &CMat, rows: usize) -> f64 {
    let block = u.rows(0, rows);
    let gram = block.adjoint() * block;
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Smallest `D` for which the first `D` rows of `⟨n|𝒰|m<d⟩` form an isometry within `tol`.
///
/// The candidate window doubles until the Gram deviation drops below `tol`,
/// and the exact cutoff inside the window is found by bisection (the
/// deviation is a maximum over diagonal tails and so is monotone in `D`).
pub fn effective_cutoff(params: &BasisParams, d: usize, tol: f64, d_max: usize) -> Result<usize> {
    assert!(d >= 1 && tol > 0.0 && tol < 1.0);
    if params.is_identity() || only_diagonal(params) {
        return Ok(d);
    }
    let mut window = (2 * d).max(8);
    loop {
        if window > d_max {
            let u = plbo_unitary_matrix(params, d_max, d, d_max);
            if gram_residual(&u, d_max) < tol {
                return Ok(bisect_cutoff(&u, d, d_max, tol));
            }
            return Err(Error::CutoffNotReached { d_max });
        }
        let u = plbo_unitary_matrix(params, window, d, window);
        if gram_residual(&u, window) < tol {
            return Ok(bisect_cutoff(&u, d, window, tol));
        }
        window *= 2;
    }
}

fn only_diagonal(p: &BasisParams) -> bool {
    p.alpha_x == 0.0 && p.alpha_p == 0.0 && p.r == 0.0 && p.s == 0.0 && p.gamma == 0.0
}

fn bisect_cutoff(u: &CMat, d: usize, hi: usize, tol: f64) -> usize {
    let (mut lo, mut hi) = (d, hi);
    if gram_residual(u, lo) < tol {
        return lo;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if gram_residual(u, mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Operators needed by the Hamiltonian cores for one site, each `dim × dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSet {
    pub x: CMat,
    pub p: CMat,
    pub x2: CMat,
    pub p2: CMat,
    /// `XP + PX`.
    pub xp: CMat,
}

impl QuadratureSet {
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Crops products of padded quadrature matrices `xb`, `pb` to `dim`.
    pub fn from_padded(xb: &CMat, pb: &CMat, dim: usize) -> Self {
        Self {
            x: top_left(xb, dim, dim),
            p: top_left(pb, dim, dim),
            x2: top_left(&(xb * xb), dim, dim),
            p2: top_left(&(pb * pb), dim, dim),
            xp: top_left(&(xb * pb + pb * xb), dim, dim),
        }
    }

    pub fn fock(dim: usize) -> Self {
        let big = dim + PRODUCT_PAD;
        Self::from_padded(&quadrature_x(big), &quadrature_p(big), dim)
    }

    /// Quadratures `X' = s11 X + s12 P + dx`, `P' = s21 X + s22 P + dp`.
    pub fn linear(s: [[f64; 2]; 2], shift: (f64, f64), dim: usize) -> Self {
        let big = dim + PRODUCT_PAD;
        let (x, p) = (quadrature_x(big), quadrature_p(big));
        let id = CMat::identity(big, big);
        let xb = &x * c(s[0][0]) + &p * c(s[0][1]) + &id * c(shift.0);
        let pb = &x * c(s[1][0]) + &p * c(s[1][1]) + &id * c(shift.1);
        Self::from_padded(&xb, &pb, dim)
    }

    /// Quadratures of the transformed mode `A = 𝒰† a 𝒰`.
    pub fn plbo(params: &BasisParams, dim: usize) -> Self {
        let big = dim + PRODUCT_PAD;
        let a = transformed_ladder_matrix(params, big);
        let ad = a.adjoint();
        let xb = (&a + &ad) * c(std::f64::consts::FRAC_1_SQRT_2);
        let pb = (&a - &ad) * (-I * std::f64::consts::FRAC_1_SQRT_2);
        Self::from_padded(&xb, &pb, dim)
    }
}

/// Exact Fock matrix elements `⟨m|D(α)|n⟩` for `m, n < dim`, via associated Laguerre polynomials.
pub fn displacement_matrix(alpha: C64, dim: usize) -> CMat {
    let x = alpha.norm_sqr();
    let pref = (-x / 2.0).exp();
    let mut out = CMat::zeros(dim, dim);
    for k in 0..dim {
        // L_j^{(k)}(x) for j = 0..dim-k
        let len = dim - k;
        let mut lag = vec![0.0; len];
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + k as f64 - x;
        }
        for j in 2..len {
            let jf = j as f64;
            lag[j] = ((2.0 * jf - 1.0 + k as f64 - x) * lag[j - 1] - (jf - 1.0 + k as f64) * lag[j - 2]) / jf;
        }
        let (pos, neg) = (alpha.powu(k as u32), (-alpha.conj()).powu(k as u32));
        for (j, &l) in lag.iter().enumerate() {
            // sqrt(j! / (j+k)!)
            let ratio = ((j + 1)..=(j + k)).fold(1.0f64, |acc, t| acc / (t as f64).sqrt());
            out[(j + k, j)] = pos * (pref * ratio * l);
            if k > 0 {
                out[(j, j + k)] = neg * (pref * ratio * l);
            }
        }
    }
    out
}

/// Closed-form coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!`.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut term = c((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..dim {
        out.push(term);
        term = term * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// Fock amplitudes of `S(r)|0⟩` with real `r` (`a → a cosh r − a† sinh r`).
pub fn squeezed_vacuum_amplitudes(r: f64, dim: usize) -> Vec<C64> {
    let mut out = vec![ZERO; dim];
    let t = -r.tanh();
    let mut amp = 1.0 / r.cosh().sqrt();
    for k in 0..dim.div_ceil(2) {
        if 2 * k < dim {
            out[2 * k] = c(amp);
        }
        let n = (2 * k) as f64;
        amp *= t * ((n + 1.0) * (n + 2.0)).sqrt() / (2.0 * (k as f64 + 1.0));
    }
    out
}
