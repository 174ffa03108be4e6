//! Decaying-turbulence evaluation: fresh-seed reference run, filtered to
//! the coarse grid, against which every closure variant is scored.

use crate::closures::ClosureModel;
use crate::dataset::SnapshotDataset;
use crate::diagnostics::{energy_spectrum, spectrum_error, trajectory_error, Spectrum};
use crate::filtering::{build_fdns_dataset, FaceAverageFilter};
use crate::grid::Grid;
use crate::integrator::{simulate, BlowUpEvent, SimConfig};
use crate::pipeline::initial::random_initial_condition;
use crate::pipeline::ExperimentConfig;
use crate::projection::PoissonSolver;
use crate::velocity::StaggeredVelocity;
use crate::{Error, Result};

/// Per-closure outcome of a decaying-turbulence run.
#[derive(Debug, Clone)]
pub struct VariantOutcome {
    pub name: String,
    pub blowup: Option<BlowUpEvent>,
    /// Snapshot times shared with the reference (truncated at blow-up).
    pub times: Vec<f64>,
    /// Relative trajectory error vs. the filtered reference.
    pub error: Vec<f64>,
    /// Resolved energy per step.
    pub energy: Vec<f64>,
    /// Total momentum per step.
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    /// Closure energy contribution per step.
    pub closure_energy: Vec<f64>,
    /// Spectrum at the training horizon (if reached) and at the final time
    /// (if the run completed).
    pub spectrum_mid: Option<Spectrum>,
    pub spectrum_final: Option<Spectrum>,
    /// Spectrum error vs. the reference at every reached snapshot time.
    pub spectrum_error_series: Vec<f64>,
    /// Spectrum error vs. the reference at the final time.
    pub spectrum_error_final: Option<f64>,
}

/// The full decaying-turbulence report.
pub struct DecayReport {
    pub config_digest: String,
    pub seed: u64,
    pub fine_resolution: usize,
    pub coarse_resolution: usize,
    pub dt_coarse: f64,
    pub t_end: f64,
    /// Times right of this boundary extrapolate beyond the training data.
    pub extrapolation_boundary: f64,
    pub reference: SnapshotDataset,
    pub reference_energy: Vec<f64>,
    pub reference_spectrum_mid: Spectrum,
    pub reference_spectrum_final: Spectrum,
    pub outcomes: Vec<VariantOutcome>,
}

/// Evaluate one closure against an existing filtered reference. The coarse
/// run uses the reference snapshot spacing as its step, so states align
/// with reference indices one to one.
pub fn evaluate_on_reference(
    name: &str,
    closure: ClosureModel,
    reference: &SnapshotDataset,
    t_mid: f64,
) -> VariantOutcome {
    let dt = reference.dt_between;
    let n_steps = reference.len() - 1;
    let cfg = SimConfig::new(dt, n_steps, reference.nu)
        .with_forcing(reference.forcing)
        .with_stride(1)
        .with_closure(closure);
    let traj = simulate(&reference.velocities[0], &cfg);

    let states: Vec<StaggeredVelocity> = traj.snapshots.iter().map(|s| s.vel.clone()).collect();
    let error = trajectory_error(&states, &reference.velocities[..states.len()]);
    let times = traj.snapshots.iter().map(|s| s.t).collect();
    let energy = traj.diagnostics.iter().map(|d| d.energy).collect();
    let px = traj.diagnostics.iter().map(|d| d.px).collect();
    let py = traj.diagnostics.iter().map(|d| d.py).collect();
    let closure_energy = traj.diagnostics.iter().map(|d| d.closure_energy).collect();

    let spectrum_error_series: Vec<f64> = states
        .iter()
        .zip(&reference.velocities)
        .map(|(m, r)| spectrum_error(&energy_spectrum(m), &energy_spectrum(r)))
        .collect();

    let mid_index = (t_mid / dt).round() as usize;
    let spectrum_mid = traj
        .snapshots
        .iter()
        .find(|s| s.step == mid_index)
        .map(|s| energy_spectrum(&s.vel));
    let (spectrum_final, spectrum_error_final) = if traj.completed() {
        let spec = energy_spectrum(&traj.final_state().vel);
        (Some(spec), spectrum_error_series.last().copied())
    } else {
        (None, None)
    };

    VariantOutcome {
        name: name.to_string(),
        blowup: traj.blowup,
        times,
        error,
        energy,
        px,
        py,
        closure_energy,
        spectrum_mid,
        spectrum_final,
        spectrum_error_series,
        spectrum_error_final,
    }
}

/// Build the fresh-seed filtered reference for a decaying run.
pub fn decay_reference(
    cfg: &ExperimentConfig,
    coarse_resolution: usize,
    seed: u64,
) -> Result<SnapshotDataset> {
    let fine = Grid::square(cfg.fine_resolution);
    let solver = PoissonSolver::new(fine);
    let ic = random_initial_condition(&solver, seed, cfg.kappa_max, cfg.target_energy);
    let n_steps = (cfg.t_eval() / cfg.dt).round() as usize;
    let sim_cfg = SimConfig::new(cfg.dt, n_steps, cfg.nu).with_stride(cfg.dt_coarse_multiplier);
    let traj = simulate(&ic, &sim_cfg);
    if let Some(event) = traj.blowup {
        return Err(Error::BlowUp {
            time: event.t,
            step: event.step,
        });
    }
    let filter = FaceAverageFilter::new(fine, cfg.fine_resolution / coarse_resolution)?;
    build_fdns_dataset(&traj, &filter, seed)
}

/// Run the decaying-turbulence evaluation for a set of named closures at
/// one coarse resolution. The initial condition uses a fresh seed disjoint
/// from the training seeds; the horizon is twice the training horizon.
pub fn run_decaying_experiment(
    closures: Vec<(String, ClosureModel)>,
    coarse_resolution: usize,
    cfg: &ExperimentConfig,
) -> Result<DecayReport> {
    cfg.validate()?;
    let seed = cfg.eval_seed();
    let reference = decay_reference(cfg, coarse_resolution, seed)?;

    let t_mid = cfg.t_train;
    let outcomes = closures
        .into_iter()
        .map(|(name, closure)| evaluate_on_reference(&name, closure, &reference, t_mid))
        .collect();

    let mid_index = ((t_mid / reference.dt_between).round() as usize).min(reference.len() - 1);
    let reference_energy = reference
        .velocities
        .iter()
        .map(crate::ops::kinetic_energy)
        .collect();

    Ok(DecayReport {
        config_digest: cfg.digest(),
        seed,
        fine_resolution: cfg.fine_resolution,
        coarse_resolution,
        dt_coarse: reference.dt_between,
        t_end: cfg.t_eval(),
        extrapolation_boundary: cfg.t_train,
        reference_spectrum_mid: energy_spectrum(&reference.velocities[mid_index]),
        reference_spectrum_final: energy_spectrum(reference.velocities.last().unwrap()),
        reference_energy,
        reference,
        outcomes,
    })
}
