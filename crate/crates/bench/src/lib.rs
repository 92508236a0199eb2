//! Shared benchmark instances.

use vartn::gaussian::random_pure_covariance;
use vartn::HamiltonianSpec;

/// Random pure `n`-mode instance with the global CZ coupling `kappa`.
pub fn instance(n: usize, kappa: f64, seed: u64) -> HamiltonianSpec {
    HamiltonianSpec::new(random_pure_covariance(n, 0.4, seed), kappa).expect("random covariances are invertible")
}
