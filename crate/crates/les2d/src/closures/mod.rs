//! Closure models for the coarse-grained momentum equation.
//!
//! Every model maps the resolved velocity to a pointwise closure tendency
//! (same units as the momentum right-hand side divided by the cell volume).
//! The integrator adds the closure to the resolved tendency inside the
//! projection.

pub mod neural;
pub mod skew_1d;
pub mod smagorinsky;
pub mod strain;

use crate::nn::CnnSpec;
use crate::ops::ForcingSpec;
use crate::velocity::StaggeredVelocity;

pub use neural::{clip_to_eddy_viscosity, zero_sum_reparam, SkewTerms};
pub use strain::{strain_rate, StrainTensorField};

/// Simulation context a closure may consult: the CNN-based closures feed
/// the resolved tendency (which depends on viscosity and forcing) to the
/// network alongside the velocity.
#[derive(Debug, Clone, Copy)]
pub struct ClosureContext {
    pub nu: f64,
    pub forcing: ForcingSpec,
    pub t: f64,
}

impl ClosureContext {
    pub fn new(nu: f64, forcing: ForcingSpec, t: f64) -> Self {
        ClosureContext { nu, forcing, t }
    }

    pub fn at_time(&self, t: f64) -> Self {
        ClosureContext { t, ..*self }
    }
}

/// The closure model zoo. `NoClosure` doubles as the plain coarse solver.
#[derive(Debug, Clone)]
pub enum ClosureModel {
    NoClosure,
    Smagorinsky {
        cs: f64,
    },
    DynamicSmagorinsky,
    Cnn {
        spec: CnnSpec,
        theta: Vec<f64>,
    },
    Div {
        spec: CnnSpec,
        theta: Vec<f64>,
    },
    Skew {
        spec: CnnSpec,
        theta: Vec<f64>,
        terms: SkewTerms,
    },
    /// A trained CNN closure projected onto a non-negative eddy viscosity
    /// at evaluation time.
    CnnClipped {
        spec: CnnSpec,
        theta: Vec<f64>,
    },
}

impl ClosureModel {
    pub fn evaluate(&self, vel: &StaggeredVelocity, ctx: &ClosureContext) -> StaggeredVelocity {
        match self {
            ClosureModel::NoClosure => StaggeredVelocity::zeros(vel.grid),
            ClosureModel::Smagorinsky { cs } => smagorinsky::smagorinsky_closure(vel, *cs),
            ClosureModel::DynamicSmagorinsky => smagorinsky::dynamic_smagorinsky_closure(vel),
            ClosureModel::Cnn { spec, theta } => neural::cnn_closure(spec, theta, vel, ctx),
            ClosureModel::Div { spec, theta } => neural::div_closure(spec, theta, vel, ctx),
            ClosureModel::Skew { spec, theta, terms } => {
                neural::skew_closure(spec, theta, vel, ctx, *terms)
            }
            ClosureModel::CnnClipped { spec, theta } => {
                let raw = neural::cnn_closure(spec, theta, vel, ctx);
                neural::clip_to_eddy_viscosity(vel, &raw)
            }
        }
    }

    /// Short display name used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            ClosureModel::NoClosure => "nc",
            ClosureModel::Smagorinsky { .. } => "smag",
            ClosureModel::DynamicSmagorinsky => "dyn-smag",
            ClosureModel::Cnn { .. } => "cnn",
            ClosureModel::Div { .. } => "div",
            ClosureModel::Skew { .. } => "skew",
            ClosureModel::CnnClipped { .. } => "cnn-c",
        }
    }

    pub fn is_neural(&self) -> bool {
        matches!(
            self,
            ClosureModel::Cnn { .. }
                | ClosureModel::Div { .. }
                | ClosureModel::Skew { .. }
                | ClosureModel::CnnClipped { .. }
        )
    }
}

/// The closure families with trainable parameters. Dispatch used by the
/// trajectory-fitting machinery, which owns the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuralVariant {
    Cnn,
    Div,
    Skew,
}

impl NeuralVariant {
    pub fn out_channels(&self) -> usize {
        match self {
            NeuralVariant::Cnn => 2,
            NeuralVariant::Div => 3,
            NeuralVariant::Skew => 4,
        }
    }

    /// The standard closure network for this variant.
    pub fn standard_spec(&self) -> CnnSpec {
        CnnSpec::standard(self.out_channels())
    }

    pub fn param_count(&self, spec: &CnnSpec) -> usize {
        match self {
            NeuralVariant::Skew => neural::skew_param_count(spec),
            _ => spec.param_count(),
        }
    }

    pub fn init_params(&self, spec: &CnnSpec, seed: u64) -> Vec<f64> {
        match self {
            NeuralVariant::Skew => neural::skew_init_params(spec, seed),
            _ => spec.init_params(seed),
        }
    }

    pub fn evaluate(
        &self,
        spec: &CnnSpec,
        theta: &[f64],
        vel: &StaggeredVelocity,
        ctx: &ClosureContext,
    ) -> StaggeredVelocity {
        match self {
            NeuralVariant::Cnn => neural::cnn_closure(spec, theta, vel, ctx),
            NeuralVariant::Div => neural::div_closure(spec, theta, vel, ctx),
            NeuralVariant::Skew => neural::skew_closure(spec, theta, vel, ctx, SkewTerms::Both),
        }
    }

    /// Evaluation that also returns the network trace, so a later adjoint
    /// does not re-run the forward pass.
    pub fn evaluate_traced(
        &self,
        spec: &CnnSpec,
        theta: &[f64],
        vel: &StaggeredVelocity,
        ctx: &ClosureContext,
    ) -> (StaggeredVelocity, crate::nn::CnnTrace) {
        match self {
            NeuralVariant::Cnn => neural::cnn_closure_traced(spec, theta, vel, ctx),
            NeuralVariant::Div => neural::div_closure_traced(spec, theta, vel, ctx),
            NeuralVariant::Skew => {
                neural::skew_closure_traced(spec, theta, vel, ctx, SkewTerms::Both)
            }
        }
    }

    /// Adjoint of [`NeuralVariant::evaluate`] replaying a recorded trace;
    /// accumulates into `d_theta` and returns the velocity cotangent.
    pub fn vjp(
        &self,
        spec: &CnnSpec,
        theta: &[f64],
        vel: &StaggeredVelocity,
        ctx: &ClosureContext,
        trace: &crate::nn::CnnTrace,
        cot: &StaggeredVelocity,
        d_theta: &mut [f64],
    ) -> StaggeredVelocity {
        match self {
            NeuralVariant::Cnn => {
                neural::cnn_closure_vjp(spec, theta, vel, ctx, trace, cot, d_theta)
            }
            NeuralVariant::Div => {
                neural::div_closure_vjp(spec, theta, vel, ctx, trace, cot, d_theta)
            }
            NeuralVariant::Skew => neural::skew_closure_vjp(
                spec,
                theta,
                vel,
                ctx,
                SkewTerms::Both,
                trace,
                cot,
                d_theta,
            ),
        }
    }

    /// Package trained parameters as a runnable closure model.
    pub fn to_closure_model(&self, spec: CnnSpec, theta: Vec<f64>) -> ClosureModel {
        match self {
            NeuralVariant::Cnn => ClosureModel::Cnn { spec, theta },
            NeuralVariant::Div => ClosureModel::Div { spec, theta },
            NeuralVariant::Skew => ClosureModel::Skew {
                spec,
                theta,
                terms: SkewTerms::Both,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NeuralVariant::Cnn => "cnn",
            NeuralVariant::Div => "div",
            NeuralVariant::Skew => "skew",
        }
    }
}

/// Energy contribution of a closure tendency: the plain inner product with
/// the resolved velocity. Negative means the closure drains resolved energy.
pub fn closure_energy(vel: &StaggeredVelocity, closure: &StaggeredVelocity) -> f64 {
    vel.dot(closure)
}

/// Momentum contribution of a closure tendency (volume-weighted component
/// sums). Conservative closures return zero.
pub fn closure_momentum(closure: &StaggeredVelocity) -> (f64, f64) {
    let w = closure.grid.cell_volume;
    (w * closure.u.sum(), w * closure.v.sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn no_closure_is_zero_with_zero_energy_and_momentum() {
        let g = Grid::square(8);
        let vel = StaggeredVelocity::from_fn(g, |x, y| (x + y).sin(), |x, _| x.cos());
        let ctx = ClosureContext::new(1e-3, ForcingSpec::None, 0.0);
        let c = ClosureModel::NoClosure.evaluate(&vel, &ctx);
        assert_eq!(c.max_abs(), 0.0);
        assert_eq!(closure_energy(&vel, &c), 0.0);
        assert_eq!(closure_momentum(&c), (0.0, 0.0));
    }
}
