//! End-to-end smoke test of the command-line workflow on a tiny
//! configuration: data generation, calibration, training, evaluation and
//! spectrum extraction all run inside one temporary run directory.

use std::path::Path;
use std::process::Command;

fn les2d(dir: &Path, args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_les2d"))
        .arg("--out")
        .arg(dir)
        .args([
            "--set",
            "fine_resolution=32",
            "--set",
            "coarse_resolutions=8",
            "--set",
            "dt=5e-3",
            "--set",
            "t_train=0.2",
            "--set",
            "n_train_sims=1",
            "--set",
            "kappa_max=3",
            "--set",
            "epochs=2",
            "--set",
            "batch_size=4",
            "--set",
            "n_unroll=2",
            "--set",
            "batches_per_epoch=1",
            "--set",
            "kolmogorov_warmup_t=0.1",
            "--set",
            "kolmogorov_horizon_t=0.5",
        ])
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn full_workflow_on_a_tiny_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    les2d(dir, &["gen-data"]);
    assert!(dir.join("data_r8_sim0.lesd").exists());
    assert!(dir.join("config.snapshot").exists());

    let out = les2d(dir, &["calibrate-smag"]);
    assert!(out.contains("calibrated Cs"), "{out}");
    assert!(dir.join("smag_r8.lesp").exists());
    assert!(dir.join("calibration_r8.csv").exists());

    les2d(dir, &["train", "--variant", "skew"]);
    assert!(dir.join("skew_r8.lesp").exists());
    assert!(dir.join("skew_r8_loss.csv").exists());

    les2d(dir, &["run-decay"]);
    let report = std::fs::read_to_string(dir.join("decay_r8/report.txt")).unwrap();
    assert!(report.contains("nc:"), "{report}");
    assert!(report.contains("skew:"), "{report}");
    assert!(dir.join("decay_r8/skew_error.csv").exists());
    assert!(dir.join("decay_r8/fdns_spectrum_final.csv").exists());

    les2d(dir, &["run-kolmogorov"]);
    assert!(dir.join("kolmogorov_r8/report.txt").exists());
    assert!(dir.join("kolmogorov_r8/skew_energy_kde.csv").exists());

    les2d(
        dir,
        &[
            "spectrum",
            "--dataset",
            dir.join("data_r8_sim0.lesd").to_str().unwrap(),
            "--index",
            "0",
        ],
    );
    assert!(dir.join("spectrum_data_r8_sim0_0.csv").exists());

    les2d(dir, &["skew-diag"]);
    assert!(dir.join("skewdiag_r8/term_decomposition.csv").exists());

    // rejects unknown keys cleanly
    let output = Command::new(env!("CARGO_BIN_EXE_les2d"))
        .args(["--out"])
        .arg(dir)
        .args(["--set", "nonsense=1", "gen-data"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}
