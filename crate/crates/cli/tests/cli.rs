use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::Instant;

use serde_json::Value;

use vartn_cli::{execute, fit_power_law, CliError, Command, Config, SimulationReport};

fn config(json: &str) -> Config {
    Config::from_json(json, Path::new(".")).unwrap()
}

fn run(command: Command, json: &str) -> SimulationReport {
    let dir = tempfile::tempdir().unwrap();
    execute(command, &config(json), dir.path(), false).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn binary(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_vartn"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

/// Report JSON with the timing block removed.
fn without_timing(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn vacuum_energy_vanishes_and_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary(&["gbs", "--config", fixture("vacuum.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: SimulationReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.instances[0].energy < 1e-10);
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.config_hash.len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("amplitudes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n_1,n_2,n_3,re,im,prob");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&first[..3], &[0.0, 0.0, 0.0]);
    assert!((first[5] - 1.0).abs() < 1e-12);
}

#[test]
fn optimal_basis_beats_fock_at_equal_dimension() {
    let base = r#""schema_version": 1, "seed": 1, "state": {"kind": "random", "n_modes": 3, "squeeze_max": 0.5}, "dims": {"uniform": 3}, "dmrg": {"chi_max": 9}"#;
    let fock = run(Command::Gbs, &format!(r#"{{{base}, "basis": "fock"}}"#));
    let olb = run(Command::Gbs, &format!(r#"{{{base}, "basis": "olb"}}"#));
    let (ef, eo) = (fock.instances[0].energy, olb.instances[0].energy);
    assert!(eo <= ef, "olb {eo} vs fock {ef}");
    assert!(olb.instances[0].eps_d.is_some() && olb.instances[0].eps_basis.is_some());
}

#[test]
fn zero_kappa_nongauss_matches_gbs() {
    let json = r#"{"schema_version": 1, "seed": 4, "state": {"kind": "random", "n_modes": 2, "squeeze_max": 0.4}, "dims": {"uniform": 5}}"#;
    let g = run(Command::Gbs, json);
    let n = run(Command::Nongauss, json);
    assert_eq!(g.instances[0].energy, n.instances[0].energy);
    assert_eq!(g.instances[0].amplitudes, n.instances[0].amplitudes);
}

#[test]
fn vacuum_kappa_grid_energy_rises() {
    let energies: Vec<f64> = [0.0, 0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|k| {
            let json = format!(r#"{{"schema_version": 1, "state": {{"kind": "vacuum", "n_modes": 3}}, "kappa": {k}, "dims": {{"uniform": 5}}, "dmrg": {{"chi_max": 8}}}}"#);
            run(Command::Nongauss, &json).instances[0].energy
        })
        .collect();
    assert!(energies[0] < 1e-10);
    assert!(energies.windows(2).all(|w| w[1] >= w[0]), "{energies:?}");
}

#[test]
fn learned_basis_never_loses_to_fock() {
    for (seed, kappa) in [(0u64, 0.3), (1, 0.5)] {
        let base = format!(
            r#""schema_version": 1, "seed": {seed}, "state": {{"kind": "random", "n_modes": 3, "squeeze_max": 0.3}}, "kappa": {kappa}, "dims": {{"uniform": 6}}"#
        );
        let fock = run(Command::Nongauss, &format!(r#"{{{base}, "dmrg": {{"chi_max": 6}}}}"#));
        let plbo = run(Command::Nongauss, &format!(r#"{{{base}, "basis": "plbo", "plbo": {{"warmup_chi": 6, "final_chi": 6, "sweeps": 4}}}}"#));
        let (ef, ep) = (fock.instances[0].energy, plbo.instances[0].energy);
        assert!(ep <= ef + 1e-9, "seed {seed}: plbo {ep} vs fock {ef}");
        assert_eq!(plbo.instances[0].plbo.as_ref().unwrap().params.len(), 3);
    }
}

#[test]
fn reports_are_deterministic_and_thread_independent() {
    let cfg = fixture("batch.json");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let threads = ["1", "2", "1"];
    for (dir, t) in dirs.iter().zip(threads) {
        let out = binary(&["gbs", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[("VARTN_THREADS", t)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = without_timing(&dirs[0].path().join("report.json"));
    assert_eq!(first["instances"].as_array().unwrap().len(), 3);
    for dir in &dirs[1..] {
        assert_eq!(first, without_timing(&dir.path().join("report.json")));
    }
    assert!(dirs[0].path().join("amplitudes_002.csv").exists());
}

#[test]
fn sampling_outputs_are_reproducible() {
    let cfg = fixture("sample.json");
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &dirs {
        let out = binary(&["sample", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["samples.csv", "displacements.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        assert_eq!(a, std::fs::read(dirs[1].path().join(file)).unwrap(), "{file}");
    }
    let samples = std::fs::read_to_string(dirs[0].path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().next().unwrap(), "seed_index,n_1,n_2,leaked_weight");
    assert_eq!(samples.lines().count(), 501);
    let disp = std::fs::read_to_string(dirs[0].path().join("displacements.csv")).unwrap();
    assert_eq!(disp.lines().next().unwrap(), "seed_index,x_1,x_2,p_1,p_2");
    let report: SimulationReport = serde_json::from_str(&std::fs::read_to_string(dirs[0].path().join("report.json")).unwrap()).unwrap();
    let s = report.sampling.unwrap();
    assert!(s.max_leaked_weight < 1e-2);
    assert!(s.mean_photons.iter().all(|&m| m > 0.0 && m < 1.0));
}

#[test]
fn fast_validation_passes_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = binary(&["validate", "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed().as_secs() < 60);
    let report: SimulationReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.suites.len(), 7);
    assert!(report.suites.iter().all(|s| s.passed));
}

#[test]
fn corrupted_mpo_fails_validation_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary(&["validate", "--config", fixture("corrupt_mpo.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mpo_equivalence"), "{stderr}");
    assert!(!stderr.contains("gradient_check"), "{stderr}");
}

#[test]
fn exit_codes_follow_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let code = |name: &str, extra: &[&str]| {
        let cfg = fixture(name);
        let mut args = vec!["gbs", "--config", cfg.to_str().unwrap(), "--out", out_dir];
        args.extend_from_slice(extra);
        binary(&args, &[]).status.code()
    };
    assert_eq!(code("unknown_key.json", &[]), Some(2));
    assert_eq!(code("unconverged.json", &[]), Some(3));
    assert_eq!(code("unconverged.json", &["--allow-unconverged"]), Some(0));
    assert_eq!(code("cutoff_limit.json", &[]), Some(4));
    assert_eq!(code("missing.json", &[]), Some(1));
}

#[test]
fn fits_power_law_from_csv() {
    let report = {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config::load(&fixture("fit.json")).unwrap();
        execute(Command::Fit, &cfg, dir.path(), false).unwrap()
    };
    let fit = report.fit.unwrap();
    assert_eq!(fit.n_points, 5);
    assert!((fit.result.prefactor - 2.0).abs() < 1e-9);
    assert!((fit.result.exponent - 3.0).abs() < 1e-9);
    let bad = execute(Command::Fit, &config(r#"{"schema_version": 1, "fit": {"pairs": [[1, 1], [2, 0]]}}"#), Path::new("/tmp"), false);
    assert!(matches!(bad, Err(CliError::Config(_))));
}

#[test]
fn infidelity_scales_as_a_sublinear_power_of_truncation_error() {
    let mut pairs = Vec::new();
    for d in 1..=4 {
        for chi in [1, 2, 4] {
            let json = format!(
                r#"{{"schema_version": 1, "seed": 3, "instances": 6, "state": {{"kind": "random", "n_modes": 2, "squeeze_max": 0.6}},
                "basis": "olb", "dims": {{"uniform": {d}}}, "dmrg": {{"chi_max": {chi}}}, "amplitudes": {{"max_total": 0}}}}"#
            );
            let dir = tempfile::tempdir().unwrap();
            let report = execute(Command::Gbs, &config(&json), dir.path(), true).unwrap();
            for inst in &report.instances {
                let one_minus_f = inst.oracle.as_ref().unwrap().one_minus_fidelity;
                let eps_d = inst.eps_d.unwrap();
                if eps_d > 1e-13 && one_minus_f > 1e-13 {
                    pairs.push((eps_d, one_minus_f));
                }
            }
        }
    }
    let fit = fit_power_law(&pairs).unwrap();
    assert!(pairs.len() > 50);
    assert!(fit.exponent > 0.3 && fit.exponent < 0.8, "{fit:?}");
}
