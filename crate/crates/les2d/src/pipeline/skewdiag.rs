//! Term-wise diagnostics of a trained skew-symmetric closure: energy
//! contribution and magnitude of the redistribution (`K`) and dissipation
//! (`Q`) paths along a trajectory, plus ablated simulations.

use crate::closures::{neural, ClosureContext, ClosureModel, SkewTerms};
use crate::dataset::SnapshotDataset;
use crate::nn::cnn::CnnSpec;
use crate::pipeline::decay::{evaluate_on_reference, VariantOutcome};

/// Per-snapshot decomposition of the closure into its two paths.
#[derive(Debug, Clone)]
pub struct SkewTermSample {
    pub t: f64,
    /// `<u, (K - K^T) u>`; zero up to round-off.
    pub k_energy: f64,
    /// `<u, -Q^T Q u>`; never positive.
    pub q_energy: f64,
    pub k_norm: f64,
    pub q_norm: f64,
}

pub struct SkewDiagReport {
    pub samples: Vec<SkewTermSample>,
    /// Full closure evaluated against the reference.
    pub full: VariantOutcome,
    /// Runs with one term zeroed.
    pub k_only: VariantOutcome,
    pub q_only: VariantOutcome,
}

/// Evaluate the term decomposition along the reference snapshots and run
/// the ablated simulations from the same initial state.
pub fn skew_term_diagnostics(
    spec: &CnnSpec,
    theta: &[f64],
    reference: &SnapshotDataset,
    t_mid: f64,
) -> SkewDiagReport {
    let ctx0 = ClosureContext::new(reference.nu, reference.forcing, 0.0);
    let samples = reference
        .times
        .iter()
        .zip(&reference.velocities)
        .map(|(&t, vel)| {
            let ctx = ctx0.at_time(t);
            let c_k = neural::skew_closure(spec, theta, vel, &ctx, SkewTerms::KOnly);
            let c_q = neural::skew_closure(spec, theta, vel, &ctx, SkewTerms::QOnly);
            SkewTermSample {
                t,
                k_energy: vel.dot(&c_k),
                q_energy: vel.dot(&c_q),
                k_norm: c_k.norm_sq().sqrt(),
                q_norm: c_q.norm_sq().sqrt(),
            }
        })
        .collect();

    let model = |terms| ClosureModel::Skew {
        spec: spec.clone(),
        theta: theta.to_vec(),
        terms,
    };
    let full = evaluate_on_reference("skew", model(SkewTerms::Both), reference, t_mid);
    let k_only = evaluate_on_reference("skew-k", model(SkewTerms::KOnly), reference, t_mid);
    let q_only = evaluate_on_reference("skew-q", model(SkewTerms::QOnly), reference, t_mid);

    SkewDiagReport {
        samples,
        full,
        k_only,
        q_only,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::neural::{skew_init_params, skew_param_count};
    use crate::closures::NeuralVariant;
    use crate::grid::Grid;
    use crate::integrator::{simulate, SimConfig};
    use crate::pipeline::initial::random_initial_condition;
    use crate::projection::PoissonSolver;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn term_energies_have_the_guaranteed_signs() {
        let grid = Grid::square(16);
        let solver = PoissonSolver::new(grid);
        let ic = random_initial_condition(&solver, 31, 4, 1.2);
        let traj = simulate(&ic, &SimConfig::new(0.02, 10, 1e-3));
        let reference = SnapshotDataset::from_coarse_trajectory(&traj, 31);

        let spec = NeuralVariant::Skew.standard_spec();
        let mut theta = skew_init_params(&spec, 1);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for w in theta.iter_mut() {
            *w += rng.random_range(-0.05..0.05);
        }
        assert_eq!(theta.len(), skew_param_count(&spec));

        let report = skew_term_diagnostics(&spec, &theta, &reference, 0.1);
        for s in &report.samples {
            let scale = s.k_norm.max(1e-300) * 100.0;
            assert!(s.k_energy.abs() <= 1e-12 * scale, "k energy {}", s.k_energy);
            assert!(s.q_energy <= 0.0, "q energy {}", s.q_energy);
        }
        assert!(report.full.blowup.is_none());
        assert!(report.k_only.blowup.is_none());
        assert!(report.q_only.blowup.is_none());
    }
}
