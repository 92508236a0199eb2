//! Variational tensor-network simulation of continuous-variable boson sampling.
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod lbo;
pub mod linalg;
pub mod mpo;
pub mod mps;
pub mod oracle;
pub mod plbo;
pub mod sampling;

pub use error::{Error, Result};
pub use fock::BasisParams;
pub use gaussian::CovarianceState;
pub use lbo::{DimChoice, LocalBasisPlan};
pub use mpo::{Basis, HamiltonianSpec, Mpo};
pub use mps::dmrg::{DmrgMode, DmrgOptions, DmrgOutcome, EnergyReport};
pub use mps::{CompressionReport, Mps};
pub use plbo::{PlboConfig, PlboResult};
pub use sampling::SampleBatch;
