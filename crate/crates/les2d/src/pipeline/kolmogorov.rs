//! Kolmogorov-flow evaluation: long-horizon forced runs from a warmed-up
//! state, exercising the trained closures far outside their training data.

use crate::closures::ClosureModel;
use crate::diagnostics::{energy_spectrum, gaussian_kde, Spectrum};
use crate::filtering::FaceAverageFilter;
use crate::grid::Grid;
use crate::integrator::{simulate, BlowUpEvent, SimConfig};
use crate::ops::ForcingSpec;
use crate::pipeline::initial::random_initial_condition;
use crate::pipeline::ExperimentConfig;
use crate::projection::PoissonSolver;
use crate::velocity::StaggeredVelocity;
use crate::{Error, Result};

/// Per-closure outcome of the forced run.
#[derive(Debug, Clone)]
pub struct KolmogorovOutcome {
    pub name: String,
    pub blowup: Option<BlowUpEvent>,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub closure_energy: Vec<f64>,
    /// Per-bin mean of the per-snapshot spectra.
    pub mean_spectrum: Spectrum,
    /// Gaussian KDE of the resolved-energy distribution over the run,
    /// evaluated on [`KolmogorovReport::kde_grid`].
    pub energy_density: Vec<f64>,
}

pub struct KolmogorovReport {
    pub config_digest: String,
    pub seed: u64,
    pub fine_resolution: usize,
    pub coarse_resolution: usize,
    pub dt_coarse: f64,
    pub warmup_t: f64,
    pub horizon_t: f64,
    /// Common evaluation grid of the energy KDEs.
    pub kde_grid: Vec<f64>,
    pub outcomes: Vec<KolmogorovOutcome>,
}

/// Warm up the flow with a fine forced reference run and return its final
/// state filtered to the coarse grid; this is the shared LES initial state.
pub fn kolmogorov_warmup(
    cfg: &ExperimentConfig,
    coarse_resolution: usize,
) -> Result<StaggeredVelocity> {
    let fine = Grid::square(cfg.fine_resolution);
    let solver = PoissonSolver::new(fine);
    let ic = random_initial_condition(&solver, cfg.kolmogorov_seed(), cfg.kappa_max, cfg.target_energy);
    let n_steps = (cfg.kolmogorov_warmup_t / cfg.dt).round() as usize;
    let warm_cfg = SimConfig::new(cfg.dt, n_steps, cfg.nu)
        .with_forcing(ForcingSpec::Kolmogorov)
        .with_stride(n_steps.max(1));
    let traj = simulate(&ic, &warm_cfg);
    if let Some(event) = traj.blowup {
        return Err(Error::BlowUp {
            time: event.t,
            step: event.step,
        });
    }
    let filter = FaceAverageFilter::new(fine, cfg.fine_resolution / coarse_resolution)?;
    filter.apply(&traj.final_state().vel)
}

/// Run the forced evaluation for a set of named closures. Spectra are
/// averaged over snapshots taken every `spectrum_stride` coarse steps.
pub fn run_kolmogorov_experiment(
    closures: Vec<(String, ClosureModel)>,
    coarse_resolution: usize,
    cfg: &ExperimentConfig,
) -> Result<KolmogorovReport> {
    cfg.validate()?;
    let les_ic = kolmogorov_warmup(cfg, coarse_resolution)?;

    let dt = cfg.dt_coarse();
    let n_steps = (cfg.kolmogorov_horizon_t / dt).round() as usize;
    let spectrum_stride = 25usize.min(n_steps.max(1));

    type RawOutcome = (
        String,
        Option<BlowUpEvent>,
        Vec<f64>,
        Vec<f64>,
        (Vec<f64>, Vec<f64>),
        Vec<f64>,
        Spectrum,
    );
    let mut raw: Vec<RawOutcome> = Vec::new();
    let mut energy_min = f64::INFINITY;
    let mut energy_max = f64::NEG_INFINITY;

    for (name, closure) in closures {
        let sim_cfg = SimConfig::new(dt, n_steps, cfg.nu)
            .with_forcing(ForcingSpec::Kolmogorov)
            .with_stride(spectrum_stride)
            .with_closure(closure);
        let traj = simulate(&les_ic, &sim_cfg);

        let times: Vec<f64> = traj.diagnostics.iter().map(|d| d.t).collect();
        let energy: Vec<f64> = traj.diagnostics.iter().map(|d| d.energy).collect();
        let moms: (Vec<f64>, Vec<f64>) = (
            traj.diagnostics.iter().map(|d| d.px).collect(),
            traj.diagnostics.iter().map(|d| d.py).collect(),
        );
        let closure_energy: Vec<f64> =
            traj.diagnostics.iter().map(|d| d.closure_energy).collect();
        for &e in &energy {
            energy_min = energy_min.min(e);
            energy_max = energy_max.max(e);
        }

        // per-bin mean over snapshot spectra
        let mut mean: Option<Spectrum> = None;
        for snap in &traj.snapshots {
            let spec = energy_spectrum(&snap.vel);
            match &mut mean {
                None => mean = Some(spec),
                Some(acc) => {
                    for (a, e) in acc.energy.iter_mut().zip(&spec.energy) {
                        *a += e;
                    }
                }
            }
        }
        let mut mean = mean.expect("at least the initial snapshot exists");
        let inv = 1.0 / traj.snapshots.len() as f64;
        for e in &mut mean.energy {
            *e *= inv;
        }

        raw.push((name, traj.blowup, times, energy, moms, closure_energy, mean));
    }

    // shared KDE grid spanning all observed energies
    let pad = 0.1 * (energy_max - energy_min).max(1e-12);
    let lo = energy_min - pad;
    let hi = energy_max + pad;
    let kde_grid: Vec<f64> = (0..200)
        .map(|k| lo + (hi - lo) * k as f64 / 199.0)
        .collect();

    let outcomes = raw
        .into_iter()
        .map(|(name, blowup, times, energy, moms, closure_energy, mean_spectrum)| {
            let energy_density = if energy.len() >= 2 {
                gaussian_kde(&energy, &kde_grid)
            } else {
                vec![0.0; kde_grid.len()]
            };
            KolmogorovOutcome {
                name,
                blowup,
                times,
                energy,
                px: moms.0,
                py: moms.1,
                closure_energy,
                mean_spectrum,
                energy_density,
            }
        })
        .collect();

    Ok(KolmogorovReport {
        config_digest: cfg.digest(),
        seed: cfg.kolmogorov_seed(),
        fine_resolution: cfg.fine_resolution,
        coarse_resolution,
        dt_coarse: dt,
        warmup_t: cfg.kolmogorov_warmup_t,
        horizon_t: cfg.kolmogorov_horizon_t,
        kde_grid,
        outcomes,
    })
}
