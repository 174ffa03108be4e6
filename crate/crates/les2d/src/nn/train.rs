//! Mini-batch trajectory-fitting training loop.

use crate::closures::NeuralVariant;
use crate::dataset::SnapshotDataset;
use crate::nn::adam::ParamStore;
use crate::nn::cnn::CnnSpec;
use crate::nn::unroll::UnrollProblem;
use crate::projection::PoissonSolver;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub n_unroll: usize,
    pub seed: u64,
    /// Cap on mini-batches per epoch. `None` runs a full pass over all
    /// window starts; a cap draws that many batches of starts, still
    /// without replacement within the epoch.
    pub batches_per_epoch: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 20,
            n_unroll: 5,
            seed: 0,
            batches_per_epoch: None,
        }
    }
}

/// Loss summary of one epoch. Losses are means over the windows visited in
/// the epoch; the baseline is the no-closure loss over the same windows.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub nc_baseline_loss: f64,
    pub relative_loss: f64,
}

/// Train a closure of the given family on filtered-DNS datasets.
///
/// All datasets must share resolution, snapshot spacing, viscosity and
/// forcing. Each epoch shuffles the pool of (dataset, start) windows and
/// walks it in mini-batches (sampling without replacement); the gradient of
/// a batch is the mean of the per-window gradients. Deterministic for a
/// fixed seed.
pub fn train(
    datasets: &[SnapshotDataset],
    variant: NeuralVariant,
    spec: &CnnSpec,
    cfg: &TrainConfig,
) -> Result<(ParamStore, Vec<EpochStats>)> {
    assert!(!datasets.is_empty(), "training needs at least one dataset");
    let first = &datasets[0];
    for ds in datasets {
        assert_eq!((ds.nx, ds.ny), (first.nx, first.ny), "dataset resolutions differ");
        assert_eq!(ds.dt_between, first.dt_between, "snapshot spacings differ");
        assert_eq!(ds.nu, first.nu, "viscosities differ");
        assert_eq!(ds.forcing, first.forcing, "forcings differ");
    }

    let solver = PoissonSolver::new(first.grid());
    let problem = UnrollProblem {
        solver: &solver,
        dt: first.dt_between,
        nu: first.nu,
        forcing: first.forcing,
        closure: Some((variant, spec)),
    };
    let nc_problem = UnrollProblem {
        solver: &solver,
        dt: first.dt_between,
        nu: first.nu,
        forcing: first.forcing,
        closure: None,
    };

    // all valid window starts across datasets
    let mut pool: Vec<(usize, usize)> = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        if ds.len() > cfg.n_unroll {
            for start in 0..ds.len() - cfg.n_unroll {
                pool.push((di, start));
            }
        }
    }
    assert!(!pool.is_empty(), "datasets too short for the unroll length");

    // no-closure reference loss per window, computed once
    let nc_losses: Vec<f64> = pool
        .iter()
        .map(|&(di, start)| {
            nc_problem.loss_only(&[], datasets[di].window(start, cfg.n_unroll).unwrap())
        })
        .collect();

    let mut store = ParamStore::new(variant.init_params(spec, cfg.seed));
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x7261_696e);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut batch_counter = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let max_windows = cfg
            .batches_per_epoch
            .map(|b| (b * cfg.batch_size).min(order.len()))
            .unwrap_or(order.len());

        let mut epoch_loss = 0.0;
        let mut epoch_nc = 0.0;
        let mut visited = 0usize;
        for chunk in order[..max_windows].chunks(cfg.batch_size) {
            let mut grad = vec![0.0; store.len()];
            let mut batch_loss = 0.0;
            for &widx in chunk {
                let (di, start) = pool[widx];
                let window = datasets[di].window(start, cfg.n_unroll).unwrap();
                let (loss, g) = problem.loss_and_grad(&store.params, window);
                batch_loss += loss;
                epoch_nc += nc_losses[widx];
                for (dst, src) in grad.iter_mut().zip(&g) {
                    *dst += src;
                }
            }
            let inv = 1.0 / chunk.len() as f64;
            for g in &mut grad {
                *g *= inv;
            }
            if !batch_loss.is_finite() || store.adam_step(&grad).is_err() {
                return Err(Error::NonFiniteGradient {
                    batch: batch_counter,
                    windows: chunk.iter().map(|&w| pool[w].1).collect(),
                });
            }
            batch_counter += 1;
            epoch_loss += batch_loss;
            visited += chunk.len();
        }

        let mean_loss = epoch_loss / visited as f64;
        let nc_baseline = epoch_nc / visited as f64;
        history.push(EpochStats {
            epoch,
            mean_loss,
            nc_baseline_loss: nc_baseline,
            relative_loss: mean_loss / nc_baseline,
        });
    }

    Ok((store, history))
}
