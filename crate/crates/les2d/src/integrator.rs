//! Classical RK4 time stepping of the projected momentum equation and the
//! full-simulation driver with blow-up detection.

use crate::closures::{closure_energy, ClosureContext, ClosureModel};
use crate::ops::{self, ForcingSpec};
use crate::projection::PoissonSolver;
use crate::velocity::StaggeredVelocity;
use crate::{Error, Result};

/// Infinity-norm threshold beyond which a simulation counts as blown up.
/// Physical magnitudes in these experiments are order one.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Configuration of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub nu: f64,
    pub forcing: ForcingSpec,
    /// Keep every `snapshot_stride`-th state (the initial and final states
    /// are always kept).
    pub snapshot_stride: usize,
    pub closure: ClosureModel,
}

impl SimConfig {
    pub fn new(dt: f64, n_steps: usize, nu: f64) -> Self {
        assert!(dt > 0.0);
        SimConfig {
            dt,
            n_steps,
            nu,
            forcing: ForcingSpec::None,
            snapshot_stride: 1,
            closure: ClosureModel::NoClosure,
        }
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        assert!(stride >= 1);
        self.snapshot_stride = stride;
        self
    }

    pub fn with_closure(mut self, closure: ClosureModel) -> Self {
        self.closure = closure;
        self
    }
}

/// Stage tendency `f(u, t) = P(r(u) + c(u))`: resolved pointwise tendency
/// plus closure, projected. Also reports the closure energy contribution at
/// the evaluation point.
fn stage_tendency(
    vel: &StaggeredVelocity,
    solver: &PoissonSolver,
    cfg: &SimConfig,
    t: f64,
) -> (StaggeredVelocity, f64) {
    let mut r = ops::rhs_pointwise(vel, cfg.nu, cfg.forcing, t);
    let mut c_energy = 0.0;
    if !matches!(cfg.closure, ClosureModel::NoClosure) {
        let ctx = ClosureContext::new(cfg.nu, cfg.forcing, t);
        let c = cfg.closure.evaluate(vel, &ctx);
        c_energy = closure_energy(vel, &c);
        r.add_assign(&c);
    }
    (solver.project(&r), c_energy)
}

/// One classical RK4 step. Every stage tendency is projected, so each stage
/// velocity stays divergence-free and the convective term stays
/// energy-neutral stage-wise; forcing and closure are re-evaluated at every
/// stage velocity and stage time.
pub fn rk4_step(
    vel: &StaggeredVelocity,
    solver: &PoissonSolver,
    cfg: &SimConfig,
    t: f64,
) -> Result<StaggeredVelocity> {
    rk4_step_diag(vel, solver, cfg, t).map(|(v, _)| v)
}

/// [`rk4_step`] that also reports the closure energy contribution at the
/// step's initial state.
pub fn rk4_step_diag(
    vel: &StaggeredVelocity,
    solver: &PoissonSolver,
    cfg: &SimConfig,
    t: f64,
) -> Result<(StaggeredVelocity, f64)> {
    let dt = cfg.dt;
    let (k1, c_energy) = stage_tendency(vel, solver, cfg, t);

    let mut y = vel.clone();
    y.add_scaled(0.5 * dt, &k1);
    let (k2, _) = stage_tendency(&y, solver, cfg, t + 0.5 * dt);

    let mut y = vel.clone();
    y.add_scaled(0.5 * dt, &k2);
    let (k3, _) = stage_tendency(&y, solver, cfg, t + 0.5 * dt);

    let mut y = vel.clone();
    y.add_scaled(dt, &k3);
    let (k4, _) = stage_tendency(&y, solver, cfg, t + dt);

    let mut out = vel.clone();
    out.add_scaled(dt / 6.0, &k1);
    out.add_scaled(dt / 3.0, &k2);
    out.add_scaled(dt / 3.0, &k3);
    out.add_scaled(dt / 6.0, &k4);

    if !out.is_finite() || out.max_abs() > BLOWUP_LIMIT {
        return Err(Error::BlowUp { time: t + dt, step: 0 });
    }
    Ok((out, c_energy))
}

/// A stored state along a trajectory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub vel: StaggeredVelocity,
}

/// Scalar diagnostics recorded every step.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub energy: f64,
    pub px: f64,
    pub py: f64,
    pub closure_energy: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BlowUpEvent {
    pub step: usize,
    pub t: f64,
}

/// Result of a simulation: snapshots at the configured stride, per-step
/// scalar diagnostics, and the blow-up event if the run terminated early.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub nu: f64,
    pub forcing: ForcingSpec,
    pub snapshot_stride: usize,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub blowup: Option<BlowUpEvent>,
}

impl TrajectoryRecord {
    pub fn completed(&self) -> bool {
        self.blowup.is_none()
    }

    pub fn final_state(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the IC")
    }
}

fn diagnostics_at(vel: &StaggeredVelocity, t: f64, closure_energy: f64) -> StepDiagnostics {
    let (px, py) = ops::momentum(vel);
    StepDiagnostics {
        t,
        energy: ops::kinetic_energy(vel),
        px,
        py,
        closure_energy,
    }
}

/// Run `cfg.n_steps` RK4 steps from `ic` (assumed divergence-free; project
/// beforehand if unsure). A blow-up terminates the run early and is
/// recorded on the trajectory instead of raised.
pub fn simulate(ic: &StaggeredVelocity, cfg: &SimConfig) -> TrajectoryRecord {
    let solver = PoissonSolver::new(ic.grid);
    let mut record = TrajectoryRecord {
        dt: cfg.dt,
        nu: cfg.nu,
        forcing: cfg.forcing,
        snapshot_stride: cfg.snapshot_stride,
        snapshots: vec![Snapshot {
            step: 0,
            t: 0.0,
            vel: ic.clone(),
        }],
        diagnostics: vec![diagnostics_at(ic, 0.0, 0.0)],
        blowup: None,
    };

    let mut vel = ic.clone();
    for step in 1..=cfg.n_steps {
        let t = (step - 1) as f64 * cfg.dt;
        match rk4_step_diag(&vel, &solver, cfg, t) {
            Ok((next, c_energy)) => {
                vel = next;
                let t_next = step as f64 * cfg.dt;
                record.diagnostics.push(diagnostics_at(&vel, t_next, c_energy));
                if step % cfg.snapshot_stride == 0 || step == cfg.n_steps {
                    record.snapshots.push(Snapshot {
                        step,
                        t: t_next,
                        vel: vel.clone(),
                    });
                }
            }
            Err(_) => {
                record.blowup = Some(BlowUpEvent {
                    step,
                    t: step as f64 * cfg.dt,
                });
                break;
            }
        }
    }
    record
}
