//! Rate-of-strain tensor on the staggered grid and the divergence of a
//! symmetric tensor field.

use crate::field::ScalarField;
use crate::grid::Grid;
use crate::velocity::StaggeredVelocity;

/// Symmetric rate-of-strain tensor at its natural staggered locations:
/// normal components at cell centers, the shear component at corners.
#[derive(Debug, Clone)]
pub struct StrainTensorField {
    /// `du/dx` at centers.
    pub s11: ScalarField,
    /// `dv/dy` at centers.
    pub s22: ScalarField,
    /// `(du/dy + dv/dx) / 2` at corners.
    pub s12: ScalarField,
}

/// Compact central differences of the face velocities; each derivative
/// lands exactly on its natural location, so no interpolation is needed.
pub fn strain_rate(vel: &StaggeredVelocity) -> StrainTensorField {
    let g = &vel.grid;
    let s11 = (&vel.u - &vel.u.shifted(-1, 0)).scale(1.0 / g.hx);
    let s22 = (&vel.v - &vel.v.shifted(0, -1)).scale(1.0 / g.hy);
    let du_dy = (&vel.u.shifted(0, 1) - &vel.u).scale(1.0 / g.hy);
    let dv_dx = (&vel.v.shifted(1, 0) - &vel.v).scale(1.0 / g.hx);
    let s12 = (&du_dy + &dv_dx).scale(0.5);
    StrainTensorField { s11, s22, s12 }
}

/// Divergence of a symmetric tensor with `t11`, `t22` at centers and `t12`
/// at corners; the result lands on the velocity faces. Component sums
/// telescope to zero, so any closure in this form conserves momentum.
pub fn tensor_divergence(
    grid: Grid,
    t11: &ScalarField,
    t22: &ScalarField,
    t12: &ScalarField,
) -> StaggeredVelocity {
    let mut cu = (&t11.shifted(1, 0) - t11).scale(1.0 / grid.hx);
    cu.add_assign(&(&(t12 - &t12.shifted(0, -1))).scale(1.0 / grid.hy));
    let mut cv = (t12 - &t12.shifted(-1, 0)).scale(1.0 / grid.hx);
    cv.add_assign(&(&(&t22.shifted(0, 1) - t22)).scale(1.0 / grid.hy));
    StaggeredVelocity {
        grid,
        u: cu,
        v: cv,
    }
}

/// Adjoint of [`tensor_divergence`] with respect to the tensor components.
pub fn tensor_divergence_vjp(
    grid: Grid,
    cot: &StaggeredVelocity,
) -> (ScalarField, ScalarField, ScalarField) {
    let t11_bar = (&cot.u.shifted(-1, 0) - &cot.u).scale(1.0 / grid.hx);
    let t22_bar = (&cot.v.shifted(0, -1) - &cot.v).scale(1.0 / grid.hy);
    let mut t12_bar = (&cot.u - &cot.u.shifted(0, 1)).scale(1.0 / grid.hy);
    t12_bar.add_assign(&(&cot.v - &cot.v.shifted(1, 0)).scale(1.0 / grid.hx));
    (t11_bar, t22_bar, t12_bar)
}

/// Four-point average taking a corner lattice to cell centers.
pub fn corners_to_centers(f: &ScalarField) -> ScalarField {
    let mut out = f + &f.shifted(-1, 0);
    out.add_assign(&f.shifted(0, -1));
    out.add_assign(&f.shifted(-1, -1));
    out.scale(0.25)
}

/// Four-point average taking a center lattice to cell corners.
pub fn centers_to_corners(f: &ScalarField) -> ScalarField {
    let mut out = f + &f.shifted(1, 0);
    out.add_assign(&f.shifted(0, 1));
    out.add_assign(&f.shifted(1, 1));
    out.scale(0.25)
}
