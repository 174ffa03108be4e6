//! Training-data generation: fine-grid reference runs filtered to each
//! coarse resolution.

use crate::dataset::SnapshotDataset;
use crate::filtering::{build_fdns_dataset, FaceAverageFilter};
use crate::grid::Grid;
use crate::integrator::{simulate, SimConfig};
use crate::pipeline::initial::random_initial_condition;
use crate::pipeline::ExperimentConfig;
use crate::projection::PoissonSolver;
use crate::{Error, Result};

/// Filtered reference data for every configured coarse resolution:
/// `per_resolution[k] = (resolution, one dataset per training simulation)`.
pub struct TrainingData {
    pub per_resolution: Vec<(usize, Vec<SnapshotDataset>)>,
}

impl TrainingData {
    pub fn datasets_for(&self, resolution: usize) -> Option<&[SnapshotDataset]> {
        self.per_resolution
            .iter()
            .find(|(r, _)| *r == resolution)
            .map(|(_, ds)| ds.as_slice())
    }
}

/// Run the configured number of fine reference simulations and filter their
/// snapshot trajectories to every coarse resolution. A reference-run
/// blow-up aborts data generation (it indicates an unstable configuration,
/// not a model property).
pub fn generate_training_data(cfg: &ExperimentConfig) -> Result<TrainingData> {
    cfg.validate()?;
    let fine = Grid::square(cfg.fine_resolution);
    let solver = PoissonSolver::new(fine);
    let n_steps = (cfg.t_train / cfg.dt).round() as usize;

    let mut per_resolution: Vec<(usize, Vec<SnapshotDataset>)> = cfg
        .coarse_resolutions
        .iter()
        .map(|&r| (r, Vec::with_capacity(cfg.n_train_sims)))
        .collect();

    for sim in 0..cfg.n_train_sims {
        let seed = cfg.training_sim_seed(sim);
        let ic = random_initial_condition(&solver, seed, cfg.kappa_max, cfg.target_energy);
        let sim_cfg = SimConfig::new(cfg.dt, n_steps, cfg.nu)
            .with_stride(cfg.dt_coarse_multiplier);
        let traj = simulate(&ic, &sim_cfg);
        if let Some(event) = traj.blowup {
            return Err(Error::BlowUp {
                time: event.t,
                step: event.step,
            });
        }
        for (resolution, sets) in &mut per_resolution {
            let filter = FaceAverageFilter::new(fine, cfg.fine_resolution / *resolution)?;
            sets.push(build_fdns_dataset(&traj, &filter, seed)?);
        }
    }

    Ok(TrainingData { per_resolution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::divergence;

    fn mini_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.fine_resolution = 32;
        cfg.coarse_resolutions = vec![8, 16];
        cfg.dt = 5e-3;
        cfg.t_train = 0.1;
        cfg.n_train_sims = 2;
        cfg.kappa_max = 3;
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn snapshot_counts_follow_the_stride() {
        let cfg = mini_config();
        let data = generate_training_data(&cfg).unwrap();
        // floor(t_train / (stride * dt)) + 1 snapshots
        let expect = (cfg.t_train / (cfg.dt * cfg.dt_coarse_multiplier as f64)).floor() as usize + 1;
        for (_, sets) in &data.per_resolution {
            assert_eq!(sets.len(), 2);
            for ds in sets {
                assert_eq!(ds.len(), expect);
                assert!((ds.dt_between - cfg.dt_coarse()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stored_coarse_fields_are_divergence_free() {
        let cfg = mini_config();
        let data = generate_training_data(&cfg).unwrap();
        for (_, sets) in &data.per_resolution {
            for ds in sets {
                for vel in &ds.velocities {
                    assert!(divergence(vel).values.max_abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_simulations_give_empty_datasets() {
        let mut cfg = mini_config();
        cfg.n_train_sims = 0;
        let data = generate_training_data(&cfg).unwrap();
        for (_, sets) in &data.per_resolution {
            assert!(sets.is_empty());
        }
    }
}
