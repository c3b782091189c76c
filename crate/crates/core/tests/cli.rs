mod common;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::process::Command as Process;

use pulsesync::cli::{run, Command, ExperimentConfig, EXIT_OK, EXIT_VALIDATION, FAILURE_MARKER, PROVENANCE};
use pulsesync::reduction::{write_reduced, NoiseSpec, ReducedModel};
use serde_json::Value;

fn reduced_file(dir: &Path, model: &ReducedModel) -> std::path::PathBuf {
    let p = dir.join("reduced.json");
    write_reduced(&p, model).unwrap();
    p
}

fn provenance(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(PROVENANCE)).unwrap()).unwrap()
}

fn digest(path: &Path) -> u64 {
    let mut h = DefaultHasher::new();
    std::fs::read(path).unwrap().hash(&mut h);
    h.finish()
}

fn sim_config(reduced: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.reduced.file = Some(reduced.to_path_buf());
    cfg.noise.truncation = 2;
    cfg.sim.horizon = 20.0;
    cfg.sim.record_stride = 500;
    cfg.sim.tangent = true;
    cfg
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_toml("[sim]\nhorizon = 1.0\nhorizn = 2.0\n").unwrap_err();
    assert!(err.to_string().contains("horizn"), "{err}");
    assert!(ExperimentConfig::from_toml("[sim]\nhorizon = 1.0\n").is_ok());
}

#[test]
fn field_level_validation_messages() {
    let err = ExperimentConfig::from_toml("[model]\na = 0.7\n").unwrap_err();
    assert!(err.to_string().contains("model"), "{err}");
    let err = ExperimentConfig::from_toml("[noise]\ntruncation = 2\nalpha = [1.0, 2.0]\n").unwrap_err();
    assert!(err.to_string().contains("noise"), "{err}");
}

#[test]
fn config_roundtrips_through_toml() {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.dt = Some(5e-4);
    cfg.noise.alpha = vec![0.1; 7];
    let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn degenerate_noise_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::homogeneous_model(2));
    let mut cfg = sim_config(&file);
    cfg.noise.alpha = vec![0.1, 0.0, 0.1, 0.0, 0.1];
    let out = dir.path().join("run");
    let prov = run(Command::ReducedSim, &cfg, &out).unwrap();
    assert_eq!(prov.exit_code, EXIT_VALIDATION);
    let marker = std::fs::read_to_string(out.join(FAILURE_MARKER)).unwrap();
    assert!(marker.contains("noise nondegeneracy assumption violated"), "{marker}");
    assert!(marker.contains("alpha_1"), "{marker}");
    assert_eq!(provenance(&out)["status"], "failed");
}

#[test]
fn reduced_sim_is_reproducible_and_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::asymmetric_model(2));
    let cfg = sim_config(&file);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(Command::ReducedSim, &cfg, &a).unwrap().exit_code, EXIT_OK);
    assert_eq!(run(Command::ReducedSim, &cfg, &b).unwrap().exit_code, EXIT_OK);
    assert_eq!(digest(&a.join("trajectory.dat")), digest(&b.join("trajectory.dat")));

    let text = std::fs::read_to_string(a.join("trajectory.dat")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# step t x1 x2 x3 x4 l1 l2 l3 l4");
    assert_eq!(lines.count(), 41);

    let prov = provenance(&a);
    let copy: ExperimentConfig = serde_json::from_value(prov["config"].clone()).unwrap();
    assert_eq!(copy, cfg);
    assert_eq!(prov["seeds"][0]["seed"], 1);
    assert!(prov["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(!a.join(FAILURE_MARKER).exists());

    let mut other = cfg.clone();
    other.sim.seed = 2;
    let c = dir.path().join("c");
    run(Command::ReducedSim, &other, &c).unwrap();
    assert_ne!(digest(&a.join("trajectory.dat")), digest(&c.join("trajectory.dat")));
}

#[test]
fn lyapunov_report_is_consistent_under_homogeneous_noise() {
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::homogeneous_model(2));
    let mut cfg = sim_config(&file);
    cfg.noise.sigma = 0.3;
    cfg.lyapunov.length_factor = 2000.0;
    cfg.density.points = 256;
    cfg.density.gap_points = 64;
    let out = dir.path().join("ly");
    let prov = run(Command::Lyapunov, &cfg, &out).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK, "{:?}", prov.message);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("lyapunov.json")).unwrap()).unwrap();
    let mc = r["monte_carlo"]["lambda"].as_f64().unwrap();
    let se = r["monte_carlo"]["stderr"].as_f64().unwrap();
    let (la, lb) = (r["lambda_a"].as_f64().unwrap(), r["lambda_b"].as_f64().unwrap());
    assert!(mc < 0.0 && la < 0.0 && lb < 0.0, "{r}");
    assert!((la - lb).abs() <= 1e-6 * la.abs());
    assert!((mc - lb).abs() <= 3.0 * se, "mc {mc} ± {se}, analytic {lb}");
    assert_eq!(r["consistent"], true);
}

#[test]
fn density_and_squeeze_commands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::asymmetric_model(2));
    let mut cfg = sim_config(&file);
    cfg.density.points = 128;
    cfg.density.gap_points = 64;
    cfg.squeeze.gains = vec![2.0];
    cfg.squeeze.extra = vec![0.2];
    cfg.squeeze.steps_per_unit = 2000;
    let d = dir.path().join("density");
    assert_eq!(run(Command::Density, &cfg, &d).unwrap().exit_code, EXIT_OK);
    let rows = std::fs::read_to_string(d.join("density.dat")).unwrap().lines().count();
    assert_eq!(rows, 129);
    assert!(d.join("spectrum.dat").exists());
    let s = dir.path().join("squeeze");
    let prov = run(Command::SqueezeDemo, &cfg, &s).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK);
    assert_eq!(prov.metrics["gains"][0]["holds"], true);
    assert!(s.join("squeeze_00.dat").exists());
}

#[test]
fn noise_alpha_rebuilds_from_stored_pairings() {
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::homogeneous_model(2));
    let mut cfg = sim_config(&file);
    let table = NoiseSpec::from_fn(2, 0.1, |k| 0.1 + 0.01 * k as f64).unwrap();
    cfg.noise.alpha = table.alphas().to_vec();
    cfg.density.points = 64;
    cfg.density.gap_points = 32;
    let out = dir.path().join("d");
    let prov = run(Command::Density, &cfg, &out).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK);
    let min = prov.metrics["min"].as_f64().unwrap();
    assert!(min < 1.0 - 1e-6, "asymmetric table must give a non-uniform density, min {min}");

    cfg.noise.truncation = 3;
    cfg.noise.alpha = vec![0.1; 7];
    let prov = run(Command::Density, &cfg, &dir.path().join("e")).unwrap();
    assert_eq!(prov.exit_code, EXIT_VALIDATION);
}

#[test]
fn missing_reduced_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let prov = run(Command::Density, &ExperimentConfig::default(), dir.path()).unwrap();
    assert_eq!(prov.exit_code, EXIT_VALIDATION);
    assert!(prov.message.unwrap().contains("reduced.file"));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_pulsesync");
    let dir = tempfile::tempdir().unwrap();
    let file = reduced_file(dir.path(), &common::homogeneous_model(2));
    let cfg_path = dir.path().join("cfg.toml");
    let mut cfg = sim_config(&file);
    cfg.noise.alpha = vec![0.1, 0.0, 0.1, 0.0, 0.1];
    std::fs::write(&cfg_path, cfg.to_toml().unwrap()).unwrap();
    let out = dir.path().join("o");
    let status = Process::new(bin)
        .args(["reduced-sim", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&status.stderr).contains("noise nondegeneracy assumption violated"));

    std::fs::write(&cfg_path, "[sim]\nhorizon = 1.0\ntypo = 3\n").unwrap();
    let status = Process::new(bin).args(["density", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_VALIDATION));

    cfg.noise.alpha.clear();
    std::fs::write(&cfg_path, cfg.to_toml().unwrap()).unwrap();
    let status = Process::new(bin)
        .args(["reduced-sim", "--seed", "9", "--horizon", "2", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let prov = provenance(&out);
    assert_eq!(prov["config"]["sim"]["seed"], 9);
    assert_eq!(prov["config"]["sim"]["horizon"], 2.0);
    assert!(!out.join(FAILURE_MARKER).exists());
}

#[test]
fn all_commands_are_exposed() {
    let bin = env!("CARGO_BIN_EXE_pulsesync");
    let help = Process::new(bin).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&help.stdout);
    for c in [
        "pulse",
        "coeffs",
        "reduced-sim",
        "lyapunov",
        "density",
        "sync-scan",
        "spde-two-pulse",
        "reduced-vs-full",
        "squeeze-demo",
    ] {
        assert!(text.contains(c), "{c} missing from\n{text}");
    }
}

/// `pulse` then `coeffs` then `reduced-sim` on the coefficient file, with no PDE work after `coeffs`.
#[test]
fn pulse_coeffs_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    let p = dir.path().join("pulse");
    let prov = run(Command::Pulse, &cfg, &p).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK, "{:?}", prov.message);
    let residual = provenance(&p)["metrics"]["residual"].as_f64().unwrap();
    assert!(residual <= 1e-8, "residual {residual}");

    cfg.pulse.file = Some(p.join("pulse.dat"));
    cfg.noise.truncation = 1;
    cfg.isochron.t_relax = 40.0;
    let c = dir.path().join("coeffs");
    let prov = run(Command::Coeffs, &cfg, &c).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK, "{:?}", prov.message);
    assert_eq!(prov.metrics["nondegeneracy"]["passed"], true);
    assert!(!c.join("pulse.dat").exists());

    cfg.reduced.file = Some(c.join("reduced.json"));
    cfg.sim.horizon = 5.0;
    let s = dir.path().join("sim");
    let prov = run(Command::ReducedSim, &cfg, &s).unwrap();
    assert_eq!(prov.exit_code, EXIT_OK, "{:?}", prov.message);
}
