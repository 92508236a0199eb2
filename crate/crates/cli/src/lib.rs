//! Batch runner for the vartn engine: config parsing, pipelines, reports and validation.

pub mod config;
pub mod error;
pub mod fit;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod validate;

use std::path::Path;
use std::time::Instant;

pub use config::Config;
pub use error::{CliError, CliResult};
pub use fit::{fit_power_law, FitResult};
pub use report::SimulationReport;

use report::FitSummary;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Gbs,
    Nongauss,
    Sample,
    Validate,
    Fit,
}

/// Runs `command`, writes its outputs into `out` and returns the report.
///
/// Outputs are written before a convergence or validation failure is reported.
pub fn execute(command: Command, cfg: &Config, out: &Path, allow_unconverged: bool) -> CliResult<SimulationReport> {
    match command {
        Command::Gbs | Command::Nongauss | Command::Sample => {
            let run = match command {
                Command::Gbs => pipeline::cmd_gbs(cfg)?,
                Command::Nongauss => pipeline::cmd_nongauss(cfg)?,
                _ => pipeline::cmd_sample(cfg)?,
            };
            output::write_report(out, &run.report)?;
            output::write_amplitudes(out, &run.report.instances)?;
            if let Some(batch) = &run.batch {
                output::write_samples(out, batch)?;
            }
            match run.unconverged {
                Some(msg) if !allow_unconverged => Err(CliError::Unconverged(msg)),
                _ => Ok(run.report),
            }
        }
        Command::Validate => {
            let start = Instant::now();
            let mut report = SimulationReport::new("validate", cfg);
            report.suites = validate::run_suites(&cfg.validate);
            report.timing.total_s = start.elapsed().as_secs_f64();
            output::write_report(out, &report)?;
            let failed: Vec<String> =
                report.suites.iter().filter(|s| !s.passed).map(|s| format!("{} ({})", s.name, s.detail)).collect();
            if failed.is_empty() {
                Ok(report)
            } else {
                Err(CliError::Validation(failed.join("; ")))
            }
        }
        Command::Fit => {
            let input = cfg.fit.as_ref().ok_or_else(|| CliError::Config("fit needs a fit section".into()))?;
            let mut pairs = input.pairs.clone();
            if let Some(path) = &input.csv {
                pairs.extend(output::read_pairs(path)?);
            }
            let start = Instant::now();
            let result = fit_power_law(&pairs)?;
            let mut report = SimulationReport::new("fit", cfg);
            report.fit = Some(FitSummary { n_points: pairs.len(), result });
            report.timing.total_s = start.elapsed().as_secs_f64();
            output::write_report(out, &report)?;
            Ok(report)
        }
    }
}
