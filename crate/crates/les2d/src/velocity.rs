//! Staggered velocity and pressure fields.

use crate::field::ScalarField;
use crate::grid::Grid;
use crate::{Error, Result};

/// Velocity on the staggered grid: `u` sampled at east cell faces
/// `(i + 1/2, j)`, `v` at north cell faces `(i, j + 1/2)`. Both component
/// lattices have the full `nx` by `ny` extent thanks to periodicity.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredVelocity {
    pub grid: Grid,
    pub u: ScalarField,
    pub v: ScalarField,
}

impl StaggeredVelocity {
    pub fn zeros(grid: Grid) -> Self {
        StaggeredVelocity {
            grid,
            u: ScalarField::zeros(grid.nx, grid.ny),
            v: ScalarField::zeros(grid.nx, grid.ny),
        }
    }

    pub fn new(grid: Grid, u: ScalarField, v: ScalarField) -> Self {
        assert_eq!((u.nx(), u.ny()), (grid.nx, grid.ny));
        assert_eq!((v.nx(), v.ny()), (grid.nx, grid.ny));
        StaggeredVelocity { grid, u, v }
    }

    /// Sample analytic component functions at the staggered locations.
    pub fn from_fn(
        grid: Grid,
        fu: impl Fn(f64, f64) -> f64,
        fv: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let u = ScalarField::from_fn(grid.nx, grid.ny, |i, j| {
            let (x, y) = grid.u_pos(i, j);
            fu(x, y)
        });
        let v = ScalarField::from_fn(grid.nx, grid.ny, |i, j| {
            let (x, y) = grid.v_pos(i, j);
            fv(x, y)
        });
        StaggeredVelocity { grid, u, v }
    }

    /// Explicit finiteness check; NaN or Inf entries are reported, never
    /// silently propagated into diagnostics.
    pub fn check_finite(&self) -> Result<()> {
        if self.u.is_finite() && self.v.is_finite() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                "velocity field contains non-finite entries".into(),
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Unweighted inner product over both components.
    pub fn dot(&self, other: &StaggeredVelocity) -> f64 {
        self.u.dot(&other.u) + self.v.dot(&other.v)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    pub fn scale(&self, k: f64) -> StaggeredVelocity {
        StaggeredVelocity {
            grid: self.grid,
            u: self.u.scale(k),
            v: self.v.scale(k),
        }
    }

    pub fn scale_in_place(&mut self, k: f64) {
        self.u.scale_in_place(k);
        self.v.scale_in_place(k);
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: f64, other: &StaggeredVelocity) {
        self.u.add_scaled(k, &other.u);
        self.v.add_scaled(k, &other.v);
    }

    pub fn add_assign(&mut self, other: &StaggeredVelocity) {
        self.add_scaled(1.0, other);
    }

    pub fn sub(&self, other: &StaggeredVelocity) -> StaggeredVelocity {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn add(&self, other: &StaggeredVelocity) -> StaggeredVelocity {
        let mut out = self.clone();
        out.add_scaled(1.0, other);
        out
    }

    /// Periodic shift of both components by whole cells.
    pub fn shifted(&self, di: isize, dj: isize) -> StaggeredVelocity {
        StaggeredVelocity {
            grid: self.grid,
            u: self.u.shifted(di, dj),
            v: self.v.shifted(di, dj),
        }
    }
}

/// Pressure at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub grid: Grid,
    pub p: ScalarField,
}

impl PressureField {
    pub fn new(grid: Grid, p: ScalarField) -> Self {
        assert_eq!((p.nx(), p.ny()), (grid.nx, grid.ny));
        PressureField { grid, p }
    }

    pub fn zeros(grid: Grid) -> Self {
        PressureField {
            grid,
            p: ScalarField::zeros(grid.nx, grid.ny),
        }
    }
}
