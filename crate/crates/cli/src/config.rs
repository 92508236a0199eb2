//! Versioned JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use vartn::gaussian::{random_pure_covariance, CovarianceFile};
use vartn::{CovarianceState, DimChoice, DmrgOptions, PlboConfig};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// One JSON document drives every subcommand; sections a command does not use are ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    /// Master seed: random instances, DMRG starts and pLBO runs derive from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub state: Option<StateSpec>,
    /// Number of instances; values above 1 require a random state.
    #[serde(default = "one")]
    pub instances: usize,
    /// Mode means `(μ, ν)` added to the state.
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    /// Pure-loss channels applied in order.
    #[serde(default)]
    pub losses: Vec<Loss>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub basis: BasisKind,
    #[serde(default = "default_dims")]
    pub dims: DimChoice,
    #[serde(default)]
    pub dmrg: DmrgOptions,
    #[serde(default)]
    pub plbo: PlboConfig,
    #[serde(default)]
    pub amplitudes: AmplitudeOptions,
    #[serde(default)]
    pub oracle: OracleOptions,
    #[serde(default)]
    pub sampling: Option<SamplingOptions>,
    #[serde(default)]
    pub validate: ValidateOptions,
    #[serde(default)]
    pub fit: Option<FitInput>,
}

fn one() -> usize {
    1
}

fn default_dims() -> DimChoice {
    DimChoice::Uniform(4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum { n_modes: usize },
    /// Squeezed vacua through a Haar-random interferometer.
    Random { n_modes: usize, squeeze_max: f64, seed: Option<u64> },
    Squeezed { r: Vec<f64> },
    TwoModeSqueezed { r: f64 },
    Thermal { nbar: Vec<f64> },
    Covariance {
        n_modes: usize,
        #[serde(rename = "V")]
        v: Vec<Vec<f64>>,
        mean: Vec<f64>,
    },
    /// Covariance JSON file, relative to the config file.
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loss {
    pub mode: usize,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    #[default]
    Fock,
    Olb,
    Plbo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeOptions {
    /// Largest total photon number listed in the amplitude table.
    pub max_total: usize,
    /// Per-mode Fock cutoff of the table; raised to the effective cutoffs when needed.
    pub cutoff: Option<usize>,
}

impl Default for AmplitudeOptions {
    fn default() -> Self {
        Self { max_total: 4, cutoff: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub enabled: bool,
    /// Largest Hilbert-space dimension of the exact Gaussian amplitude series.
    pub dim_cap: usize,
    /// Largest dimension for which the truncated Hamiltonian is built densely.
    pub dense_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { enabled: true, dim_cap: 4096, dense_cap: 1024 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingOptions {
    pub count: usize,
    /// Defaults to the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidateLevel {
    #[default]
    Fast,
    Full,
}

/// Deliberate corruption used to check that validation catches failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    CorruptMpoCore,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub level: ValidateLevel,
    pub fault: Option<Fault>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitInput {
    pub pairs: Vec<(f64, f64)>,
    /// CSV with `x` and `y` columns, relative to the config file.
    pub csv: Option<PathBuf>,
}

impl Config {
    /// Parses, resolves relative paths against `base` and checks the schema.
    pub fn from_json(text: &str, base: &Path) -> CliResult<Self> {
        let mut cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version)));
        }
        if let Some(StateSpec::File { path }) = &mut cfg.state {
            *path = base.join(&*path);
        }
        if let Some(FitInput { csv: Some(path), .. }) = &mut cfg.fit {
            *path = base.join(&*path);
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn check(&self) -> CliResult<()> {
        if self.instances == 0 {
            return Err(CliError::Config("instances must be positive".into()));
        }
        if self.instances > 1 && !matches!(self.state, Some(StateSpec::Random { .. })) {
            return Err(CliError::Config("batches of more than one instance need a random state".into()));
        }
        if !self.kappa.is_finite() {
            return Err(CliError::Config("kappa must be finite".into()));
        }
        if self.losses.iter().any(|l| !(0.0..=1.0).contains(&l.eta)) {
            return Err(CliError::Config("loss transmissivity must lie in [0, 1]".into()));
        }
        if self.dmrg.chi_max == 0 {
            return Err(CliError::Config("dmrg.chi_max must be positive".into()));
        }
        if let DimChoice::Uniform(0) = self.dims {
            return Err(CliError::Config("dims must be positive".into()));
        }
        if let DimChoice::PerMode(d) = &self.dims {
            if d.contains(&0) {
                return Err(CliError::Config("dims must be positive".into()));
            }
        }
        if self.basis == BasisKind::Fock && matches!(self.dims, DimChoice::Threshold(_)) {
            return Err(CliError::Config("a threshold dimension choice needs the olb basis".into()));
        }
        if self.basis == BasisKind::Plbo {
            self.plbo.validate()?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of the parsed config, defaults included.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Covariance state of instance `index`, with means and losses applied.
    pub fn instance_state(&self, index: usize) -> CliResult<CovarianceState> {
        let spec = self.state.as_ref().ok_or_else(|| CliError::Config("missing state section".into()))?;
        let mut state = match spec {
            StateSpec::Vacuum { n_modes } => CovarianceState::vacuum(positive(*n_modes)?),
            StateSpec::Random { n_modes, squeeze_max, seed } => {
                let seed = seed.unwrap_or(self.seed).wrapping_add(index as u64);
                random_pure_covariance(positive(*n_modes)?, *squeeze_max, seed)
            }
            StateSpec::Squeezed { r } => CovarianceState::squeezed_product(r),
            StateSpec::TwoModeSqueezed { r } => CovarianceState::two_mode_squeezed(*r),
            StateSpec::Thermal { nbar } => {
                if nbar.iter().any(|&x| x.is_nan() || x < 0.0) {
                    return Err(CliError::Config("thermal occupations must be non-negative".into()));
                }
                CovarianceState::thermal(nbar)
            }
            StateSpec::Covariance { n_modes, v, mean } => {
                CovarianceFile { n_modes: *n_modes, v: v.clone(), mean: mean.clone() }.try_into()?
            }
            StateSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
        };
        if state.n_modes() == 0 {
            return Err(CliError::Config("state has no modes".into()));
        }
        if let Some(mean) = &self.mean {
            state = state.with_mean(mean.clone())?;
        }
        for loss in &self.losses {
            if loss.mode >= state.n_modes() {
                return Err(CliError::Config(format!("loss on mode {} of a {}-mode state", loss.mode, state.n_modes())));
            }
            state = state.with_loss(loss.mode, loss.eta);
        }
        if !state.is_physical() {
            return Err(CliError::Config("covariance is not a physical quantum state".into()));
        }
        Ok(state)
    }

    /// Per-mode kept dimensions for the Fock and pLBO bases.
    pub fn fixed_dims(&self, n_modes: usize) -> CliResult<Vec<usize>> {
        match &self.dims {
            DimChoice::Uniform(d) => Ok(vec![*d; n_modes]),
            DimChoice::PerMode(d) if d.len() == n_modes => Ok(d.clone()),
            DimChoice::PerMode(d) => Err(CliError::Config(format!("{} dims given for {n_modes} modes", d.len()))),
            DimChoice::Threshold(_) => Err(CliError::Config("a threshold dimension choice needs the olb basis".into())),
        }
    }
}

fn positive(n: usize) -> CliResult<usize> {
    if n == 0 {
        return Err(CliError::Config("n_modes must be positive".into()));
    }
    Ok(n)
}
