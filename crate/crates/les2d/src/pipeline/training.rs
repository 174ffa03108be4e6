//! Closure-training driver: glue between datasets, the training loop, and
//! checkpoints.

use crate::closures::{ClosureModel, NeuralVariant};
use crate::dataset::SnapshotDataset;
use crate::nn::cnn::CnnSpec;
use crate::nn::train::{train, EpochStats, TrainConfig};
use crate::pipeline::ExperimentConfig;
use crate::Result;

/// A trained closure plus its loss history.
pub struct TrainedClosure {
    pub variant: NeuralVariant,
    pub spec: CnnSpec,
    pub theta: Vec<f64>,
    pub history: Vec<EpochStats>,
    pub init_seed: u64,
}

impl TrainedClosure {
    pub fn to_closure_model(&self) -> ClosureModel {
        self.variant
            .to_closure_model(self.spec.clone(), self.theta.clone())
    }

    /// The trained CNN reinterpreted with eddy-viscosity clipping.
    pub fn to_clipped_model(&self) -> Option<ClosureModel> {
        match self.variant {
            NeuralVariant::Cnn => Some(ClosureModel::CnnClipped {
                spec: self.spec.clone(),
                theta: self.theta.clone(),
            }),
            _ => None,
        }
    }
}

/// Train one closure family on the given filtered datasets with the
/// standard architecture, using the experiment's training hyperparameters.
/// `init_seed` controls weight initialization and batch shuffling (replicas
/// differ only in this seed).
pub fn train_closure(
    datasets: &[SnapshotDataset],
    variant: NeuralVariant,
    cfg: &ExperimentConfig,
    init_seed: u64,
) -> Result<TrainedClosure> {
    let spec = variant.standard_spec();
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        n_unroll: cfg.n_unroll,
        seed: init_seed,
        batches_per_epoch: cfg.batches_per_epoch,
    };
    let (store, history) = train(datasets, variant, &spec, &train_cfg)?;
    Ok(TrainedClosure {
        variant,
        spec,
        theta: store.params,
        history,
        init_seed,
    })
}
