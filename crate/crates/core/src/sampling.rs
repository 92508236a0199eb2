//! Photon-number sampling from an MPS, with classical displacement noise.
//!
//! Randomness comes from ChaCha20 seeded with the batch seed; sample `k`
//! uses stream `k`, so batches are reproducible and can be split across
//! workers without changing their content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::displacement_matrix;
use crate::gaussian::{split_noise, CovarianceState};
use crate::linalg::{eigh_real, CMat, RMat, C64};
use crate::mps::Mps;

/// Offset separating the measurement streams from the displacement streams.
const MEASUREMENT_STREAM: u64 = 1 << 62;

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<Vec<usize>>,
    /// Quadrature displacement `(x₁…x_N, p₁…p_N)` of each sample.
    pub displacements: Vec<Vec<f64>>,
    /// Norm lost to the cutoff when the displacement was applied.
    pub leaked_weight: Vec<f64>,
    pub seed: u64,
}

/// Symmetric square root of a PSD matrix; fails on eigenvalues below `−1e-10·scale`.
fn psd_sqrt(c: &RMat) -> Result<RMat> {
    let (vals, vecs) = eigh_real(c);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if let Some(&min) = vals.first() {
        if min < -1e-10 * scale {
            return Err(Error::NonPsd { min_eigenvalue: min });
        }
    }
    let root = RMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(0.0).sqrt())));
    Ok(&vecs * root * vecs.transpose())
}

/// Zero-mean Gaussian draws with covariance `c`.
pub fn draw_displacements(c: &RMat, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if c.nrows() != c.ncols() {
        return Err(Error::ShapeMismatch("covariance must be square".into()));
    }
    let root = psd_sqrt(c)?;
    let dim = c.nrows();
    Ok((0..count)
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let z = nalgebra::DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
            (&root * z).iter().copied().collect()
        })
        .collect())
}

/// One chain-rule draw from a right-canonical state with center 0.
fn chain_rule_draw(mps: &Mps, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut occ = Vec::with_capacity(mps.n_sites());
    let mut row = CMat::identity(1, 1);
    for site in &mps.cores {
        let cand: Vec<CMat> = site.iter().map(|a| &row * a).collect();
        let weights: Vec<f64> = cand.iter().map(|v| v.norm_squared()).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (n, w) in weights.iter().enumerate() {
            if u < *w {
                pick = n;
                break;
            }
            u -= w;
        }
        occ.push(pick);
        row = &cand[pick] / crate::linalg::c(weights[pick].sqrt().max(f64::MIN_POSITIVE));
    }
    occ
}

fn prepared(mps: &Mps) -> Mps {
    let mut m = mps.clone();
    m.canonicalize(0);
    m.normalize();
    m
}

/// Photon-number samples from `|⟨n|ψ⟩|² / ⟨ψ|ψ⟩`.
pub fn sample_pnr(mps: &Mps, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let m = prepared(mps);
    (0..count).map(|k| chain_rule_draw(&m, &mut stream_rng(seed, MEASUREMENT_STREAM + k as u64))).collect()
}

/// Truncated per-mode displacement gates for a quadrature displacement.
pub fn displacement_matrices(disp: &[f64], dims: &[usize]) -> Vec<CMat> {
    let n = dims.len();
    (0..n)
        .map(|i| {
            let alpha = C64::new(disp[i], disp[n + i]) * std::f64::consts::FRAC_1_SQRT_2;
            displacement_matrix(alpha, dims[i])
        })
        .collect()
}

/// Two-stage sampling of a mixed Gaussian state from the MPS of its pure part.
pub fn noisy_sample(v_mixed: &CovarianceState, mps_pure: &Mps, count: usize, seed: u64) -> Result<SampleBatch> {
    let n = v_mixed.n_modes();
    if mps_pure.n_sites() != n {
        return Err(Error::ShapeMismatch(format!("state has {n} modes, MPS has {} sites", mps_pure.n_sites())));
    }
    let split = split_noise(v_mixed)?;
    noisy_sample_with(&split.c, mps_pure, count, seed)
}

/// Same as [`noisy_sample`] with the displacement covariance given directly.
pub fn noisy_sample_with(c: &RMat, mps_pure: &Mps, count: usize, seed: u64) -> Result<SampleBatch> {
    let dims = mps_pure.phys_dims();
    if c.nrows() != 2 * dims.len() {
        return Err(Error::ShapeMismatch("noise covariance does not match the MPS".into()));
    }
    let displacements = draw_displacements(c, count, seed)?;
    let base = prepared(mps_pure);
    let mut samples = Vec::with_capacity(count);
    let mut leaked_weight = Vec::with_capacity(count);
    for (k, d) in displacements.iter().enumerate() {
        let mut rng = stream_rng(seed, MEASUREMENT_STREAM + k as u64);
        if d.iter().all(|&x| x == 0.0) {
            samples.push(chain_rule_draw(&base, &mut rng));
            leaked_weight.push(0.0);
            continue;
        }
        let shifted = base.apply_site_matrices(&displacement_matrices(d, &dims))?;
        let m = prepared(&shifted);
        leaked_weight.push((1.0 - shifted.norm_sqr()).max(0.0));
        samples.push(chain_rule_draw(&m, &mut rng));
    }
    Ok(SampleBatch { samples, displacements, leaked_weight, seed })
}
