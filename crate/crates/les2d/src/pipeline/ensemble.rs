//! Ensemble training: several replicas of one architecture trained with
//! different seeds and evaluated on the same decaying-turbulence reference,
//! exposing the run-to-run consistency of the training procedure.

use crate::closures::NeuralVariant;
use crate::dataset::SnapshotDataset;
use crate::integrator::BlowUpEvent;
use crate::pipeline::decay::{decay_reference, evaluate_on_reference};
use crate::pipeline::training::train_closure;
use crate::pipeline::ExperimentConfig;
use crate::Result;

/// What happened to one replica.
#[derive(Debug, Clone)]
pub enum ReplicaOutcome {
    /// Training diverged (non-finite gradient); no evaluation possible.
    TrainingFailed { message: String },
    /// Trained and evaluated; the run may still have blown up.
    Evaluated {
        final_relative_loss: f64,
        blowup: Option<BlowUpEvent>,
        times: Vec<f64>,
        error: Vec<f64>,
        energy: Vec<f64>,
        /// Spectrum error vs. the reference at every reached snapshot.
        spectrum_error_series: Vec<f64>,
    },
}

impl ReplicaOutcome {
    pub fn stable(&self) -> bool {
        matches!(self, ReplicaOutcome::Evaluated { blowup: None, .. })
    }
}

#[derive(Debug, Clone)]
pub struct ReplicaReport {
    pub replica: usize,
    pub seed: u64,
    pub outcome: ReplicaOutcome,
}

pub struct EnsembleReport {
    pub config_digest: String,
    pub variant: NeuralVariant,
    pub coarse_resolution: usize,
    pub replicas: Vec<ReplicaReport>,
}

impl EnsembleReport {
    pub fn stable_count(&self) -> usize {
        self.replicas.iter().filter(|r| r.outcome.stable()).count()
    }
}

/// Train `n_replicas` instances of `variant` (distinct seeds, same data)
/// and evaluate each on the decaying-turbulence reference. Blow-ups and
/// training failures are recorded per replica, never raised.
pub fn run_ensemble(
    variant: NeuralVariant,
    n_replicas: usize,
    datasets: &[SnapshotDataset],
    coarse_resolution: usize,
    cfg: &ExperimentConfig,
) -> Result<EnsembleReport> {
    assert!(n_replicas >= 2, "an ensemble needs at least two replicas");
    let reference = decay_reference(cfg, coarse_resolution, cfg.eval_seed())?;

    let mut replicas = Vec::with_capacity(n_replicas);
    for r in 0..n_replicas {
        let seed = cfg.replica_seed(r);
        let outcome = match train_closure(datasets, variant, cfg, seed) {
            Err(err) => ReplicaOutcome::TrainingFailed {
                message: err.to_string(),
            },
            Ok(trained) => {
                let final_relative_loss = trained
                    .history
                    .last()
                    .map(|h| h.relative_loss)
                    .unwrap_or(f64::NAN);
                let eval = evaluate_on_reference(
                    variant.name(),
                    trained.to_closure_model(),
                    &reference,
                    cfg.t_train,
                );
                ReplicaOutcome::Evaluated {
                    final_relative_loss,
                    blowup: eval.blowup,
                    times: eval.times,
                    error: eval.error,
                    energy: eval.energy,
                    spectrum_error_series: eval.spectrum_error_series,
                }
            }
        };
        replicas.push(ReplicaReport {
            replica: r,
            seed,
            outcome,
        });
    }

    Ok(EnsembleReport {
        config_digest: cfg.digest(),
        variant,
        coarse_resolution,
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::data::generate_training_data;

    #[test]
    fn mini_ensemble_reports_every_replica() {
        let mut cfg = ExperimentConfig::default();
        cfg.fine_resolution = 32;
        cfg.coarse_resolutions = vec![8];
        cfg.dt = 5e-3;
        cfg.t_train = 0.2;
        cfg.n_train_sims = 1;
        cfg.kappa_max = 3;
        cfg.epochs = 2;
        cfg.batch_size = 4;
        cfg.n_unroll = 2;
        cfg.batches_per_epoch = Some(1);
        cfg.validate().unwrap();

        let data = generate_training_data(&cfg).unwrap();
        let datasets = data.datasets_for(8).unwrap();
        let report = run_ensemble(NeuralVariant::Skew, 2, datasets, 8, &cfg).unwrap();
        assert_eq!(report.replicas.len(), 2);
        let seeds: Vec<u64> = report.replicas.iter().map(|r| r.seed).collect();
        assert_ne!(seeds[0], seeds[1]);
        assert_eq!(report.stable_count(), 2, "skew replicas must stay stable");
        for replica in &report.replicas {
            match &replica.outcome {
                ReplicaOutcome::Evaluated {
                    error,
                    spectrum_error_series,
                    ..
                } => {
                    assert!(!error.is_empty());
                    assert_eq!(error.len(), spectrum_error_series.len());
                }
                other => panic!("unexpected outcome {other:?}"),
            }
        }
    }
}
