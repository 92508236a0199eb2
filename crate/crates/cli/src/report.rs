//! Report types written as `report.json`.

use serde::{Deserialize, Serialize};

use vartn::BasisParams;

use crate::config::{BasisKind, Config};
use crate::fit::FitResult;
use crate::validate::SuiteResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a run reports. All fields except `timing` are deterministic per config.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationReport {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: Config,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<InstanceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<SuiteResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    pub timing: Timing,
}

impl SimulationReport {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            config_hash: config.hash(),
            config: config.clone(),
            instances: Vec::new(),
            sampling: None,
            suites: Vec::new(),
            fit: None,
            timing: Timing::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instance_s: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub n_modes: usize,
    pub kappa: f64,
    pub basis: BasisKind,
    /// Kept local dimension of every site.
    pub dims: Vec<usize>,
    pub energy: f64,
    /// `None` when the `H²` contraction exceeded the bond cap.
    pub variance: Option<f64>,
    pub sigma_h: Option<f64>,
    pub converged: bool,
    pub sweeps: Option<usize>,
    /// Largest discarded weight of the bond truncations.
    pub eps_chi: Option<f64>,
    /// Mean per-mode discarded weight of the optimal basis.
    pub eps_basis: Option<f64>,
    /// Exact weight of the target outside the kept space, when the oracle ran.
    pub eps_d: Option<f64>,
    pub bond_dims: Vec<usize>,
    pub modes: Vec<ModeReport>,
    pub amplitude_cutoffs: Vec<usize>,
    pub amplitudes: Vec<AmplitudeRow>,
    pub oracle: Option<OracleReport>,
    pub plbo: Option<PlboSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    /// Thermal occupation of the reduced state.
    pub nbar: f64,
    pub d: usize,
    pub effective_cutoff: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRow {
    pub occupation: Vec<usize>,
    pub re: f64,
    pub im: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// `gaussian_series` (exact amplitudes) or `dense_ground` (truncated Hamiltonian).
    pub method: String,
    pub fidelity: f64,
    pub one_minus_fidelity: f64,
    pub dense_energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlboSummary {
    pub params: Vec<BasisParams>,
    pub phase1_energy: f64,
    pub fock_energy: f64,
    pub phase2_energy: f64,
    pub fell_back: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSummary {
    pub count: usize,
    pub seed: u64,
    pub cutoffs: Vec<usize>,
    pub mean_photons: Vec<f64>,
    pub mean_leaked_weight: f64,
    pub max_leaked_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n_points: usize,
    pub result: FitResult,
}
