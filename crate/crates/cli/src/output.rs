//! Report and CSV writers.

use std::fs;
use std::path::Path;

use vartn::SampleBatch;

use crate::error::CliResult;
use crate::report::{InstanceReport, SimulationReport};

pub fn write_report(dir: &Path, report: &SimulationReport) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(())
}

/// `amplitudes.csv` for a single instance, `amplitudes_<k>.csv` per instance of a batch.
pub fn write_amplitudes(dir: &Path, instances: &[InstanceReport]) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for inst in instances {
        let name = if instances.len() == 1 { "amplitudes.csv".to_string() } else { format!("amplitudes_{:03}.csv", inst.index) };
        let mut w = csv::Writer::from_path(dir.join(name))?;
        let mut header: Vec<String> = (1..=inst.n_modes).map(|i| format!("n_{i}")).collect();
        header.extend(["re", "im", "prob"].map(String::from));
        w.write_record(&header)?;
        for row in &inst.amplitudes {
            let mut rec: Vec<String> = row.occupation.iter().map(|n| n.to_string()).collect();
            rec.extend([row.re, row.im, row.prob].map(|x| format!("{x:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// `samples.csv` (seed_index, n_1…n_N, leaked_weight) and `displacements.csv` (seed_index, x_1…x_N, p_1…p_N).
pub fn write_samples(dir: &Path, batch: &SampleBatch) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let n = batch.samples.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(dir.join("samples.csv"))?;
    let mut header = vec!["seed_index".to_string()];
    header.extend((1..=n).map(|i| format!("n_{i}")));
    header.push("leaked_weight".into());
    w.write_record(&header)?;
    for (k, (occ, leak)) in batch.samples.iter().zip(&batch.leaked_weight).enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(occ.iter().map(|x| x.to_string()));
        rec.push(format!("{leak:e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("displacements.csv"))?;
    let mut header = vec!["seed_index".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("p_{i}")));
    w.write_record(&header)?;
    for (k, disp) in batch.displacements.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(disp.iter().map(|x| format!("{x:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `(x, y)` pairs from a CSV with `x` and `y` columns.
pub fn read_pairs(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let row: XY = rec?;
        out.push((row.x, row.y));
    }
    Ok(out)
}

#[derive(serde::Deserialize)]
struct XY {
    x: f64,
    y: f64,
}
