//! Pressure Poisson solver and the divergence-free projector.
//!
//! The projector `P = I - G (M G)^{-1} M` is applied with an FFT-based
//! inverse of the exact discrete Laplacian `M G` (not the spectral
//! Laplacian), so it annihilates the *discrete* divergence to solver
//! precision. On the uniform grid the cell-volume matrix is a scalar and
//! cancels out of the projector; it is therefore omitted throughout.
//! Because `G = -M^T`, the projector is symmetric, so its transpose (needed
//! by the training adjoint) reuses the same application.

use crate::fft::Fft2;
use crate::field::{ScalarField, ScalarLattice, Staggering};
use crate::grid::Grid;
use crate::ops::{divergence, gradient};
use crate::velocity::{PressureField, StaggeredVelocity};
use crate::{Error, Result};

/// FFT-based solver for the discrete pressure Poisson equation on a
/// periodic grid. Immutable after construction and shareable across
/// threads; each solve allocates its own work buffers.
pub struct PoissonSolver {
    grid: Grid,
    fft: Fft2,
    /// Reciprocal symbol of the discrete Laplacian `M G`, with the zero
    /// mode pinned to zero (pressure is defined up to a constant; the
    /// returned pressure has zero mean).
    inv_symbol: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(grid: Grid) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut inv_symbol = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let sx = (2.0 * std::f64::consts::PI * i as f64 / nx as f64).cos();
                let sy = (2.0 * std::f64::consts::PI * j as f64 / ny as f64).cos();
                let lam = (2.0 * sx - 2.0) / (grid.hx * grid.hx)
                    + (2.0 * sy - 2.0) / (grid.hy * grid.hy);
                inv_symbol[j * nx + i] = if i == 0 && j == 0 { 0.0 } else { 1.0 / lam };
            }
        }
        PoissonSolver {
            grid,
            fft: Fft2::new(nx, ny),
            inv_symbol,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn solve_unchecked(&self, rhs: &ScalarField) -> ScalarField {
        let mut spec = self.fft.forward(rhs.as_slice());
        for (c, s) in spec.iter_mut().zip(&self.inv_symbol) {
            *c *= *s;
        }
        ScalarField::from_vec(self.grid.nx, self.grid.ny, self.fft.inverse_real(spec))
    }

    /// Solve `div(grad p) = rhs` for the zero-mean pressure. The right-hand
    /// side must be compatible (mean-free): `|sum rhs| <= 1e-8 * ||rhs||`.
    pub fn solve_pressure(&self, rhs: &ScalarLattice) -> Result<PressureField> {
        assert_eq!(rhs.staggering, Staggering::Center);
        let f = &rhs.values;
        assert_eq!((f.nx(), f.ny()), (self.grid.nx, self.grid.ny));
        let sum_abs = f.sum().abs();
        let limit = 1e-8 * f.norm_sq().sqrt();
        if sum_abs > limit && sum_abs > 0.0 {
            return Err(Error::IncompatibleRhs { sum_abs, limit });
        }
        Ok(PressureField::new(self.grid, self.solve_unchecked(f)))
    }

    /// Project a face field onto the discretely divergence-free subspace.
    pub fn project(&self, m: &StaggeredVelocity) -> StaggeredVelocity {
        assert_eq!(
            (m.grid.nx, m.grid.ny),
            (self.grid.nx, self.grid.ny),
            "field grid does not match solver grid"
        );
        let div = divergence(m);
        let p = PressureField::new(self.grid, self.solve_unchecked(&div.values));
        m.sub(&gradient(&p))
    }

    /// Transposed projector. The discretization satisfies `G = -M^T` and
    /// the volume matrix is scalar, so the projector is symmetric and the
    /// transpose coincides with [`PoissonSolver::project`].
    pub fn project_transpose(&self, m: &StaggeredVelocity) -> StaggeredVelocity {
        self.project(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_velocity(grid: Grid, rng: &mut ChaCha12Rng) -> StaggeredVelocity {
        StaggeredVelocity {
            grid,
            u: ScalarField::from_fn(grid.nx, grid.ny, |_, _| rng.random_range(-1.0..1.0)),
            v: ScalarField::from_fn(grid.nx, grid.ny, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    #[test]
    fn zero_rhs_gives_zero_pressure() {
        let g = Grid::square(8);
        let solver = PoissonSolver::new(g);
        let rhs = ScalarLattice::new(ScalarField::zeros(8, 8), Staggering::Center);
        let p = solver.solve_pressure(&rhs).unwrap();
        assert!(p.p.max_abs() < 1e-15);
    }

    #[test]
    fn incompatible_rhs_is_rejected() {
        let g = Grid::square(8);
        let solver = PoissonSolver::new(g);
        let rhs = ScalarLattice::new(ScalarField::constant(8, 8, 1.0), Staggering::Center);
        assert!(matches!(
            solver.solve_pressure(&rhs),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn forward_operator_residual_is_small() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let m = random_velocity(g, &mut rng);
        let rhs = divergence(&m);
        let p = solver.solve_pressure(&rhs).unwrap();
        let applied = divergence(&gradient(&p));
        let err = (&applied.values - &rhs.values).max_abs();
        assert!(err <= 1e-10 * rhs.values.max_abs().max(1.0), "residual {err}");
        assert!(p.p.mean().abs() < 1e-12);
    }

    #[test]
    fn single_mode_matches_hand_computed_symbol() {
        let g = Grid::square(8);
        let solver = PoissonSolver::new(g);
        let rhs = ScalarLattice::new(
            ScalarField::from_fn(8, 8, |i, _| g.x_center(i).cos()),
            Staggering::Center,
        );
        let p = solver.solve_pressure(&rhs).unwrap();
        let lambda1 = (2.0 - 2.0 * g.hx.cos()) / (g.hx * g.hx);
        for j in 0..8 {
            for i in 0..8 {
                let expect = -g.x_center(i).cos() / lambda1;
                assert!((p.p.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_annihilates_divergence_and_is_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for n in [8, 16, 32] {
            let g = Grid::square(n);
            let solver = PoissonSolver::new(g);
            for _ in 0..20 {
                let m = random_velocity(g, &mut rng);
                let pm = solver.project(&m);
                let div = divergence(&pm).values.max_abs();
                assert!(div <= 1e-10 * m.max_abs(), "div {div} on {n}^2");

                let ppm = solver.project(&pm);
                let drift = ppm.sub(&pm).max_abs();
                assert!(drift <= 1e-12 * pm.max_abs().max(1.0), "idempotence {drift}");
            }
        }
    }

    #[test]
    fn gradient_fields_lie_in_the_nullspace() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let p = PressureField::new(
            g,
            ScalarField::from_fn(16, 16, |_, _| rng.random_range(-1.0..1.0)),
        );
        let m = gradient(&p);
        let projected = solver.project(&m);
        assert!(projected.max_abs() <= 1e-10 * m.max_abs());
    }

    #[test]
    fn divergence_free_fields_are_fixed_points() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let m = solver.project(&random_velocity(g, &mut rng));
        let again = solver.project(&m);
        assert!(again.sub(&m).max_abs() <= 1e-12 * m.max_abs());
    }

    #[test]
    fn projection_preserves_component_sums() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let m = random_velocity(g, &mut rng);
        let pm = solver.project(&m);
        let scale = m.max_abs() * (g.num_cells() as f64);
        assert!((pm.u.sum() - m.u.sum()).abs() <= 1e-10 * scale);
        assert!((pm.v.sum() - m.v.sum()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn projector_is_self_adjoint() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        for _ in 0..10 {
            let a = random_velocity(g, &mut rng);
            let b = random_velocity(g, &mut rng);
            let lhs = solver.project(&a).dot(&b);
            let rhs = a.dot(&solver.project_transpose(&b));
            let scale = a.norm_sq().sqrt() * b.norm_sq().sqrt();
            assert!((lhs - rhs).abs() <= 1e-12 * scale, "lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn projection_commutes_with_shifts() {
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let m = random_velocity(g, &mut rng);
        let a = solver.project(&m.shifted(3, -5));
        let b = solver.project(&m).shifted(3, -5);
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn projected_convection_is_energy_neutral() {
        // the full structure chain: random field -> project -> convection
        let g = Grid::square(16);
        let solver = PoissonSolver::new(g);
        let mut rng = ChaCha12Rng::seed_from_u64(18);
        for _ in 0..10 {
            let w = solver.project(&random_velocity(g, &mut rng));
            let e = w.dot(&ops::convection(&w));
            assert!(e.abs() <= 1e-10 * w.norm_sq() * g.cell_volume);
        }
    }
}
