//! Reverse-mode differentiation through the unrolled coarse solver: the
//! trajectory-fitting loss and its exact gradient.
//!
//! The forward unroll records each RK4 stage velocity (whole-stage
//! checkpointing); the reverse sweep recomputes everything inside a stage
//! from that checkpoint, applies the stage adjoint
//! `f^T(y) = (d/du [P (r(u) + c(u, theta))])^T` built from the operator
//! adjoints (the projector is symmetric), and combines stages with the
//! discrete adjoint of the classical RK4 rule.

use crate::closures::{ClosureContext, NeuralVariant};
use crate::dataset::SnapshotDataset;
use crate::nn::cnn::{CnnSpec, CnnTrace};
use crate::ops::{self, ForcingSpec};
use crate::projection::PoissonSolver;
use crate::velocity::StaggeredVelocity;
use crate::{Error, Result};

/// One unrolled coarse-solver step: the four stage velocities, the step
/// start time, and the per-stage closure network traces, enough to replay
/// the stage computations in reverse without re-running forward passes.
pub struct StepTape {
    pub t0: f64,
    pub stages: [StaggeredVelocity; 4],
    pub traces: [Option<CnnTrace>; 4],
}

/// Recording of one loss evaluation: per-step stage checkpoints plus the
/// predicted states. Replaying it yields a deterministic gradient of the
/// same length as the parameter vector.
pub struct UnrollTape {
    pub steps: Vec<StepTape>,
    pub predictions: Vec<StaggeredVelocity>,
}

/// The differentiable coarse-solver problem: grid solver, step size,
/// physics, and the closure family being trained (`None` trains nothing and
/// serves as the no-closure baseline).
pub struct UnrollProblem<'a> {
    pub solver: &'a PoissonSolver,
    pub dt: f64,
    pub nu: f64,
    pub forcing: ForcingSpec,
    pub closure: Option<(NeuralVariant, &'a CnnSpec)>,
}

impl<'a> UnrollProblem<'a> {
    pub fn param_count(&self) -> usize {
        match &self.closure {
            Some((variant, spec)) => variant.param_count(spec),
            None => 0,
        }
    }

    fn stage_tendency(&self, theta: &[f64], vel: &StaggeredVelocity, t: f64) -> StaggeredVelocity {
        let mut r = ops::rhs_pointwise(vel, self.nu, self.forcing, t);
        if let Some((variant, spec)) = &self.closure {
            let ctx = ClosureContext::new(self.nu, self.forcing, t);
            r.add_assign(&variant.evaluate(spec, theta, vel, &ctx));
        }
        self.solver.project(&r)
    }

    fn stage_tendency_traced(
        &self,
        theta: &[f64],
        vel: &StaggeredVelocity,
        t: f64,
    ) -> (StaggeredVelocity, Option<CnnTrace>) {
        let mut r = ops::rhs_pointwise(vel, self.nu, self.forcing, t);
        let mut trace = None;
        if let Some((variant, spec)) = &self.closure {
            let ctx = ClosureContext::new(self.nu, self.forcing, t);
            let (c, tr) = variant.evaluate_traced(spec, theta, vel, &ctx);
            r.add_assign(&c);
            trace = Some(tr);
        }
        (self.solver.project(&r), trace)
    }

    /// Adjoint of the stage tendency: cotangent through the projection,
    /// the resolved tendency and the closure; parameter gradients
    /// accumulate into `d_theta`.
    fn stage_vjp(
        &self,
        theta: &[f64],
        vel: &StaggeredVelocity,
        trace: &Option<CnnTrace>,
        t: f64,
        cot: &StaggeredVelocity,
        d_theta: &mut [f64],
    ) -> StaggeredVelocity {
        let pv = self.solver.project_transpose(cot);
        let mut out = ops::rhs_pointwise_vjp(vel, self.nu, self.forcing, &pv);
        if let Some((variant, spec)) = &self.closure {
            let ctx = ClosureContext::new(self.nu, self.forcing, t);
            let trace = trace.as_ref().expect("traced forward recorded the stage");
            out.add_assign(&variant.vjp(spec, theta, vel, &ctx, trace, &pv, d_theta));
        }
        out
    }

    /// One recorded RK4 step.
    fn step_forward(
        &self,
        theta: &[f64],
        vel: &StaggeredVelocity,
        t0: f64,
    ) -> (StaggeredVelocity, StepTape) {
        let dt = self.dt;
        let y1 = vel.clone();
        let (k1, tr1) = self.stage_tendency_traced(theta, &y1, t0);
        let mut y2 = vel.clone();
        y2.add_scaled(0.5 * dt, &k1);
        let (k2, tr2) = self.stage_tendency_traced(theta, &y2, t0 + 0.5 * dt);
        let mut y3 = vel.clone();
        y3.add_scaled(0.5 * dt, &k2);
        let (k3, tr3) = self.stage_tendency_traced(theta, &y3, t0 + 0.5 * dt);
        let mut y4 = vel.clone();
        y4.add_scaled(dt, &k3);
        let (k4, tr4) = self.stage_tendency_traced(theta, &y4, t0 + dt);

        let mut out = vel.clone();
        out.add_scaled(dt / 6.0, &k1);
        out.add_scaled(dt / 3.0, &k2);
        out.add_scaled(dt / 3.0, &k3);
        out.add_scaled(dt / 6.0, &k4);
        (
            out,
            StepTape {
                t0,
                stages: [y1, y2, y3, y4],
                traces: [tr1, tr2, tr3, tr4],
            },
        )
    }

    /// Discrete adjoint of one RK4 step: pushes the cotangent on the step
    /// output back to the step input.
    fn step_adjoint(
        &self,
        theta: &[f64],
        tape: &StepTape,
        cot_out: &StaggeredVelocity,
        d_theta: &mut [f64],
    ) -> StaggeredVelocity {
        let dt = self.dt;
        let t0 = tape.t0;
        let [y1, y2, y3, y4] = &tape.stages;
        let [tr1, tr2, tr3, tr4] = &tape.traces;

        let k4_bar = cot_out.scale(dt / 6.0);
        let y4_bar = self.stage_vjp(theta, y4, tr4, t0 + dt, &k4_bar, d_theta);

        let mut k3_bar = cot_out.scale(dt / 3.0);
        k3_bar.add_scaled(dt, &y4_bar);
        let y3_bar = self.stage_vjp(theta, y3, tr3, t0 + 0.5 * dt, &k3_bar, d_theta);

        let mut k2_bar = cot_out.scale(dt / 3.0);
        k2_bar.add_scaled(0.5 * dt, &y3_bar);
        let y2_bar = self.stage_vjp(theta, y2, tr2, t0 + 0.5 * dt, &k2_bar, d_theta);

        let mut k1_bar = cot_out.scale(dt / 6.0);
        k1_bar.add_scaled(0.5 * dt, &y2_bar);
        let y1_bar = self.stage_vjp(theta, y1, tr1, t0, &k1_bar, d_theta);

        let mut cot_in = cot_out.clone();
        cot_in.add_assign(&y1_bar);
        cot_in.add_assign(&y2_bar);
        cot_in.add_assign(&y3_bar);
        cot_in.add_assign(&y4_bar);
        cot_in
    }

    /// Unroll `window.len() - 1` steps from `window[0]` and sum the squared
    /// 2-norm distances to the stored snapshots (plain unweighted norm).
    /// Skips the trace recording of [`UnrollProblem::loss_and_grad`].
    pub fn loss_only(&self, theta: &[f64], window: &[StaggeredVelocity]) -> f64 {
        assert!(window.len() >= 2, "window needs an IC and a target");
        let dt = self.dt;
        let mut u = window[0].clone();
        let mut loss = 0.0;
        for (i, target) in window[1..].iter().enumerate() {
            let t0 = i as f64 * dt;
            let k1 = self.stage_tendency(theta, &u, t0);
            let mut y = u.clone();
            y.add_scaled(0.5 * dt, &k1);
            let k2 = self.stage_tendency(theta, &y, t0 + 0.5 * dt);
            let mut y = u.clone();
            y.add_scaled(0.5 * dt, &k2);
            let k3 = self.stage_tendency(theta, &y, t0 + 0.5 * dt);
            let mut y = u.clone();
            y.add_scaled(dt, &k3);
            let k4 = self.stage_tendency(theta, &y, t0 + dt);
            u.add_scaled(dt / 6.0, &k1);
            u.add_scaled(dt / 3.0, &k2);
            u.add_scaled(dt / 3.0, &k3);
            u.add_scaled(dt / 6.0, &k4);
            loss += u.sub(target).norm_sq();
        }
        loss
    }

    /// Loss plus exact gradient via the reverse sweep.
    pub fn loss_and_grad(
        &self,
        theta: &[f64],
        window: &[StaggeredVelocity],
    ) -> (f64, Vec<f64>) {
        assert!(window.len() >= 2, "window needs an IC and a target");
        assert_eq!(theta.len(), self.param_count(), "parameter count");
        let n = window.len() - 1;

        // forward with stage checkpoints
        let mut tapes = Vec::with_capacity(n);
        let mut predictions = Vec::with_capacity(n);
        let mut u = window[0].clone();
        let mut loss = 0.0;
        for (i, target) in window[1..].iter().enumerate() {
            let (next, tape) = self.step_forward(theta, &u, i as f64 * self.dt);
            tapes.push(tape);
            u = next;
            predictions.push(u.clone());
            loss += u.sub(target).norm_sq();
        }

        // reverse sweep
        let mut d_theta = vec![0.0; theta.len()];
        let mut cot = predictions[n - 1].sub(&window[n]).scale(2.0);
        for i in (0..n).rev() {
            cot = self.step_adjoint(theta, &tapes[i], &cot, &mut d_theta);
            if i > 0 {
                cot.add_assign(&predictions[i - 1].sub(&window[i]).scale(2.0));
            }
        }
        (loss, d_theta)
    }
}

impl SnapshotDataset {
    /// Borrow the states `start ..= start + n_unroll` as a training window.
    pub fn window(&self, start: usize, n_unroll: usize) -> Result<&[StaggeredVelocity]> {
        let end = start + n_unroll + 1;
        if end > self.velocities.len() {
            return Err(Error::InsufficientWindow {
                start,
                len: n_unroll + 1,
                available: self.velocities.len(),
            });
        }
        Ok(&self.velocities[start..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::ClosureModel;
    use crate::field::ScalarField;
    use crate::grid::Grid;
    use crate::integrator::{simulate, SimConfig};
    use crate::ops::velocity_from_streamfunction;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn divfree(g: Grid, seed: u64) -> StaggeredVelocity {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let psi = ScalarField::from_fn(g.nx, g.ny, |_, _| rng.random_range(-1.0..1.0));
        velocity_from_streamfunction(g, &psi)
    }

    /// Dataset from a short no-closure run at the window's own resolution.
    fn native_dataset(g: Grid, dt: f64, n_steps: usize, seed: u64) -> SnapshotDataset {
        let solver = PoissonSolver::new(g);
        let ic = solver.project(&divfree(g, seed));
        let cfg = SimConfig::new(dt, n_steps, 1e-3);
        let traj = simulate(&ic, &cfg);
        SnapshotDataset::from_coarse_trajectory(&traj, seed)
    }

    #[test]
    fn window_bounds_are_checked() {
        let ds = native_dataset(Grid::square(8), 1e-2, 3, 1);
        assert!(ds.window(0, 3).is_ok());
        assert!(matches!(
            ds.window(1, 3),
            Err(Error::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn no_closure_loss_on_native_dataset_is_zero() {
        // The dataset was produced by the same solver at the same step size,
        // so the no-closure unroll reproduces it bit for bit.
        let g = Grid::square(8);
        let ds = native_dataset(g, 1e-2, 5, 2);
        let solver = PoissonSolver::new(g);
        let problem = UnrollProblem {
            solver: &solver,
            dt: 1e-2,
            nu: ds.nu,
            forcing: ds.forcing,
            closure: None,
        };
        let loss = problem.loss_only(&[], ds.window(0, 5).unwrap());
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn no_closure_loss_matches_independent_computation() {
        // perturb the dataset so the loss is nonzero, then recompute it with
        // the plain simulation driver
        let g = Grid::square(8);
        let mut ds = native_dataset(g, 1e-2, 3, 3);
        for vel in &mut ds.velocities[1..] {
            vel.u.add_scaled(0.01, &vel.v.clone());
        }
        let solver = PoissonSolver::new(g);
        let problem = UnrollProblem {
            solver: &solver,
            dt: 1e-2,
            nu: ds.nu,
            forcing: ds.forcing,
            closure: None,
        };
        let (loss, grad) = problem.loss_and_grad(&[], ds.window(0, 3).unwrap());
        assert!(grad.is_empty());

        let cfg = SimConfig::new(1e-2, 3, ds.nu).with_closure(ClosureModel::NoClosure);
        let traj = simulate(&ds.velocities[0], &cfg);
        let mut expect = 0.0;
        for (snap, target) in traj.snapshots[1..].iter().zip(&ds.velocities[1..]) {
            expect += snap.vel.sub(target).norm_sq();
        }
        assert!((loss - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    fn finite_difference_check(variant: NeuralVariant, seed: u64, coords: usize) {
        let g = Grid::square(8);
        let ds = native_dataset(g, 5e-3, 4, seed);
        let solver = PoissonSolver::new(g);
        let spec = CnnSpec::new(vec![
            crate::nn::LayerSpec {
                in_ch: 4,
                out_ch: 6,
                radius: 1,
                activation: crate::nn::Activation::Relu,
            },
            crate::nn::LayerSpec {
                in_ch: 6,
                out_ch: variant.out_channels(),
                radius: 1,
                activation: crate::nn::Activation::Identity,
            },
        ]);
        let problem = UnrollProblem {
            solver: &solver,
            dt: 5e-3,
            nu: ds.nu,
            forcing: ds.forcing,
            closure: Some((variant, &spec)),
        };
        let mut theta = variant.init_params(&spec, seed ^ 0xabc);
        // move the parameters off the tiny init so ReLUs and products are active
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xdef);
        for w in theta.iter_mut() {
            *w += rng.random_range(-0.05..0.05);
        }
        let window = ds.window(0, 4).unwrap();
        let (_, grad) = problem.loss_and_grad(&theta, window);

        let eps = 1e-6;
        let stride = (theta.len() / coords).max(1);
        for k in (0..theta.len()).step_by(stride) {
            let orig = theta[k];
            theta[k] = orig + eps;
            let lp = problem.loss_only(&theta, window);
            theta[k] = orig - eps;
            let lm = problem.loss_only(&theta, window);
            theta[k] = orig;
            let fd = (lp - lm) / (2.0 * eps);
            assert!(
                (fd - grad[k]).abs() <= 1e-5 * fd.abs().max(1.0),
                "{:?} param {k}: fd {fd} vs ad {}",
                variant,
                grad[k]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences_cnn() {
        finite_difference_check(NeuralVariant::Cnn, 11, 12);
    }

    #[test]
    fn gradient_matches_finite_differences_div() {
        finite_difference_check(NeuralVariant::Div, 12, 12);
    }

    #[test]
    fn gradient_matches_finite_differences_skew() {
        finite_difference_check(NeuralVariant::Skew, 13, 12);
    }

    #[test]
    fn skew_gradient_is_orthogonal_to_the_all_ones_kernel_direction() {
        // the zero-sum reparameterization projects out the all-ones
        // direction of every B sub-kernel, so the gradient must have zero
        // sum over each sub-kernel block
        let g = Grid::square(8);
        let ds = native_dataset(g, 5e-3, 3, 21);
        let solver = PoissonSolver::new(g);
        let spec = NeuralVariant::Skew.standard_spec();
        let problem = UnrollProblem {
            solver: &solver,
            dt: 5e-3,
            nu: ds.nu,
            forcing: ds.forcing,
            closure: Some((NeuralVariant::Skew, &spec)),
        };
        let theta = NeuralVariant::Skew.init_params(&spec, 7);
        let (_, grad) = problem.loss_and_grad(&theta, ds.window(0, 3).unwrap());
        let cnn_len = spec.param_count();
        let b_grad = &grad[cnn_len..];
        let grad_scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for kernel in b_grad.chunks(25) {
            let s: f64 = kernel.iter().sum();
            assert!(s.abs() <= 1e-12 * grad_scale.max(1e-300), "kernel sum {s}");
        }
    }
}
