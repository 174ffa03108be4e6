//! Run-directory output: CSV emitters, `report.txt`, `config.snapshot`.

use crate::diagnostics::Spectrum;
use crate::nn::train::EpochStats;
use crate::pipeline::decay::DecayReport;
use crate::pipeline::ensemble::{EnsembleReport, ReplicaOutcome};
use crate::pipeline::kolmogorov::KolmogorovReport;
use crate::pipeline::skewdiag::SkewDiagReport;
use crate::pipeline::ExperimentConfig;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for x in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{x}");
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<()> {
    write_rows(
        path,
        "bin_low,bin_high,energy",
        (0..spectrum.num_bins())
            .map(|b| vec![spectrum.bin_lo[b], spectrum.bin_hi[b], spectrum.energy[b]]),
    )
}

pub fn write_loss_history_csv(path: &Path, history: &[EpochStats]) -> Result<()> {
    write_rows(
        path,
        "epoch,mean_loss,nc_baseline_loss,relative_loss",
        history.iter().map(|h| {
            vec![
                h.epoch as f64,
                h.mean_loss,
                h.nc_baseline_loss,
                h.relative_loss,
            ]
        }),
    )
}

pub fn write_config_snapshot(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let mut text = format!("# config digest {}\n", cfg.digest());
    text.push_str(&cfg.to_key_values());
    std::fs::write(dir.join("config.snapshot"), text)?;
    Ok(())
}

/// Decay report: per-variant error/energy series and spectra plus a
/// stability summary.
pub fn write_decay_report(dir: &Path, report: &DecayReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "decaying turbulence evaluation");
    let _ = writeln!(summary, "config_digest = {}", report.config_digest);
    let _ = writeln!(summary, "seed = {}", report.seed);
    let _ = writeln!(
        summary,
        "fine_resolution = {}, coarse_resolution = {}, dt_coarse = {}, t_end = {}",
        report.fine_resolution, report.coarse_resolution, report.dt_coarse, report.t_end
    );
    let _ = writeln!(
        summary,
        "extrapolation boundary at t = {} (training horizon)",
        report.extrapolation_boundary
    );

    write_spectrum_csv(
        &dir.join("fdns_spectrum_mid.csv"),
        &report.reference_spectrum_mid,
    )?;
    write_spectrum_csv(
        &dir.join("fdns_spectrum_final.csv"),
        &report.reference_spectrum_final,
    )?;
    write_rows(
        &dir.join("fdns_energy.csv"),
        "t,energy",
        report
            .reference
            .times
            .iter()
            .zip(&report.reference_energy)
            .map(|(t, e)| vec![*t, *e]),
    )?;

    for outcome in &report.outcomes {
        let stem = outcome.name.replace(['/', ' '], "_");
        write_rows(
            &dir.join(format!("{stem}_error.csv")),
            "t,error,spectrum_error",
            outcome
                .times
                .iter()
                .zip(outcome.error.iter().zip(&outcome.spectrum_error_series))
                .map(|(t, (e, se))| vec![*t, *e, *se]),
        )?;
        write_rows(
            &dir.join(format!("{stem}_energy.csv")),
            "t,energy,px,py,closure_energy",
            outcome.times.iter().enumerate().map(|(k, t)| {
                vec![
                    *t,
                    outcome.energy[k],
                    outcome.px[k],
                    outcome.py[k],
                    outcome.closure_energy[k],
                ]
            }),
        )?;
        if let Some(spec) = &outcome.spectrum_mid {
            write_spectrum_csv(&dir.join(format!("{stem}_spectrum_mid.csv")), spec)?;
        }
        if let Some(spec) = &outcome.spectrum_final {
            write_spectrum_csv(&dir.join(format!("{stem}_spectrum_final.csv")), spec)?;
        }

        match outcome.blowup {
            None => {
                let _ = writeln!(
                    summary,
                    "{}: completed; final error {:.6}, final spectrum error {:.3}",
                    outcome.name,
                    outcome.error.last().copied().unwrap_or(f64::NAN),
                    outcome.spectrum_error_final.unwrap_or(f64::NAN),
                );
            }
            Some(event) => {
                let _ = writeln!(
                    summary,
                    "{}: UNSTABLE (blow-up at t = {:.4}, step {})",
                    outcome.name, event.t, event.step
                );
            }
        }
    }
    std::fs::write(dir.join("report.txt"), summary)?;
    Ok(())
}

pub fn write_kolmogorov_report(dir: &Path, report: &KolmogorovReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "kolmogorov flow evaluation");
    let _ = writeln!(summary, "config_digest = {}", report.config_digest);
    let _ = writeln!(summary, "seed = {}", report.seed);
    let _ = writeln!(
        summary,
        "fine_resolution = {}, coarse_resolution = {}, dt_coarse = {}, warmup_t = {}, horizon_t = {}",
        report.fine_resolution,
        report.coarse_resolution,
        report.dt_coarse,
        report.warmup_t,
        report.horizon_t
    );

    for outcome in &report.outcomes {
        let stem = outcome.name.replace(['/', ' '], "_");
        write_rows(
            &dir.join(format!("{stem}_energy.csv")),
            "t,energy,px,py,closure_energy",
            outcome.times.iter().enumerate().map(|(k, t)| {
                vec![
                    *t,
                    outcome.energy[k],
                    outcome.px[k],
                    outcome.py[k],
                    outcome.closure_energy[k],
                ]
            }),
        )?;
        write_spectrum_csv(
            &dir.join(format!("{stem}_mean_spectrum.csv")),
            &outcome.mean_spectrum,
        )?;
        write_rows(
            &dir.join(format!("{stem}_energy_kde.csv")),
            "energy,density",
            report
                .kde_grid
                .iter()
                .zip(&outcome.energy_density)
                .map(|(x, d)| vec![*x, *d]),
        )?;
        match outcome.blowup {
            None => {
                let _ = writeln!(summary, "{}: completed the full horizon", outcome.name);
            }
            Some(event) => {
                let _ = writeln!(
                    summary,
                    "{}: UNSTABLE (blow-up at t = {:.4}, step {})",
                    outcome.name, event.t, event.step
                );
            }
        }
    }
    std::fs::write(dir.join("report.txt"), summary)?;
    Ok(())
}

pub fn write_ensemble_report(dir: &Path, report: &EnsembleReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "ensemble of {} ({} replicas, coarse {})",
        report.variant.name(),
        report.replicas.len(),
        report.coarse_resolution
    );
    let _ = writeln!(summary, "config_digest = {}", report.config_digest);
    let _ = writeln!(
        summary,
        "stable replicas: {}/{}",
        report.stable_count(),
        report.replicas.len()
    );
    for replica in &report.replicas {
        match &replica.outcome {
            ReplicaOutcome::TrainingFailed { message } => {
                let _ = writeln!(
                    summary,
                    "replica {} (seed {}): TRAINING FAILED ({message})",
                    replica.replica, replica.seed
                );
            }
            ReplicaOutcome::Evaluated {
                final_relative_loss,
                blowup,
                times,
                error,
                energy,
                spectrum_error_series,
            } => {
                let stem = format!("replica_{}", replica.replica);
                write_rows(
                    &dir.join(format!("{stem}.csv")),
                    "t,error,energy,spectrum_error",
                    times
                        .iter()
                        .zip(error.iter().zip(energy.iter().zip(spectrum_error_series)))
                        .map(|(t, (e, (en, se)))| vec![*t, *e, *en, *se]),
                )?;
                match blowup {
                    None => {
                        let _ = writeln!(
                            summary,
                            "replica {} (seed {}): stable, final rel. loss {:.4}, final error {:.4}",
                            replica.replica,
                            replica.seed,
                            final_relative_loss,
                            error.last().copied().unwrap_or(f64::NAN)
                        );
                    }
                    Some(event) => {
                        let _ = writeln!(
                            summary,
                            "replica {} (seed {}): UNSTABLE (blow-up at t = {:.4})",
                            replica.replica, replica.seed, event.t
                        );
                    }
                }
            }
        }
    }
    std::fs::write(dir.join("report.txt"), summary)?;
    Ok(())
}

pub fn write_skewdiag_report(dir: &Path, report: &SkewDiagReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(
        &dir.join("term_decomposition.csv"),
        "t,k_energy,q_energy,k_norm,q_norm",
        report
            .samples
            .iter()
            .map(|s| vec![s.t, s.k_energy, s.q_energy, s.k_norm, s.q_norm]),
    )?;
    for (name, outcome) in [
        ("full", &report.full),
        ("k_only", &report.k_only),
        ("q_only", &report.q_only),
    ] {
        write_rows(
            &dir.join(format!("{name}_energy.csv")),
            "t,energy,closure_energy",
            outcome
                .times
                .iter()
                .zip(outcome.energy.iter().zip(&outcome.closure_energy))
                .map(|(t, (e, ce))| vec![*t, *e, *ce]),
        )?;
    }
    let mut summary = String::new();
    for (name, outcome) in [
        ("full", &report.full),
        ("k_only", &report.k_only),
        ("q_only", &report.q_only),
    ] {
        match outcome.blowup {
            None => {
                let _ = writeln!(summary, "{name}: completed");
            }
            Some(event) => {
                let _ = writeln!(summary, "{name}: UNSTABLE at t = {:.4}", event.t);
            }
        }
    }
    std::fs::write(dir.join("report.txt"), summary)?;
    Ok(())
}
