//! Spatial operators of the staggered-grid discretization: divergence,
//! gradient, convection, diffusion, forcing, and the conserved-quantity
//! functionals.
//!
//! All operators act pointwise (no cell-volume scaling); [`rhs_m`] applies
//! the volume factor where the momentum right-hand side is requested in
//! volume-integrated form. Differences and interpolations are written as
//! whole-field periodic shifts, which keeps every operator translation
//! equivariant bit-for-bit and makes the adjoints below mechanical.

use crate::field::{ScalarField, ScalarLattice, Staggering};
use crate::velocity::{PressureField, StaggeredVelocity};

/// Body forcing applied to the momentum equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingSpec {
    /// Unforced flow (decaying turbulence).
    None,
    /// Kolmogorov forcing `[sin(4 y), 0] - 0.1 u`: a steady sinusoidal body
    /// force plus linear drag. Wavenumber 4 and drag 0.1 are fixed.
    Kolmogorov,
}

impl ForcingSpec {
    pub const KOLMOGOROV_WAVENUMBER: f64 = 4.0;
    pub const KOLMOGOROV_DRAG: f64 = 0.1;

    pub fn tag(&self) -> u8 {
        match self {
            ForcingSpec::None => 0,
            ForcingSpec::Kolmogorov => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ForcingSpec::None),
            1 => Some(ForcingSpec::Kolmogorov),
            _ => None,
        }
    }
}

/// Discrete divergence at cell centers:
/// `(u_{i+1/2,j} - u_{i-1/2,j})/hx + (v_{i,j+1/2} - v_{i,j-1/2})/hy`.
pub fn divergence(vel: &StaggeredVelocity) -> ScalarLattice {
    let g = &vel.grid;
    let mut d = &vel.u - &vel.u.shifted(-1, 0);
    d.scale_in_place(1.0 / g.hx);
    let mut dy = &vel.v - &vel.v.shifted(0, -1);
    dy.scale_in_place(1.0 / g.hy);
    d.add_assign(&dy);
    ScalarLattice::new(d, Staggering::Center)
}

/// Discrete pressure gradient at faces. Satisfies the adjoint identity
/// `<gradient(p), w> = -<p, divergence(w)>` exactly in exact arithmetic.
pub fn gradient(p: &PressureField) -> StaggeredVelocity {
    let g = &p.grid;
    let mut gu = &p.p.shifted(1, 0) - &p.p;
    gu.scale_in_place(1.0 / g.hx);
    let mut gv = &p.p.shifted(0, 1) - &p.p;
    gv.scale_in_place(1.0 / g.hy);
    StaggeredVelocity {
        grid: *g,
        u: gu,
        v: gv,
    }
}

// Face-to-center and face-to-corner two-point averages used by the
// divergence-form convective fluxes.
fn u_at_centers(u: &ScalarField) -> ScalarField {
    (&u.shifted(-1, 0) + u).scale(0.5)
}

fn u_at_corners(u: &ScalarField) -> ScalarField {
    (u + &u.shifted(0, 1)).scale(0.5)
}

fn v_at_centers(v: &ScalarField) -> ScalarField {
    (&v.shifted(0, -1) + v).scale(0.5)
}

fn v_at_corners(v: &ScalarField) -> ScalarField {
    (v + &v.shifted(1, 0)).scale(0.5)
}

/// Bilinear divergence-form convection: transport of `b` by `a` with
/// two-point averaged face fluxes. `convection(w) = convect_bilinear(w, w)`.
fn convect_bilinear(a: &StaggeredVelocity, b: &StaggeredVelocity) -> StaggeredVelocity {
    let g = &a.grid;
    let uc_a = u_at_centers(&a.u);
    let uc_b = u_at_centers(&b.u);
    let ud_a = u_at_corners(&a.u);
    let ud_b = u_at_corners(&b.u);
    let vc_a = v_at_centers(&a.v);
    let vc_b = v_at_centers(&b.v);
    let vd_a = v_at_corners(&a.v);
    let vd_b = v_at_corners(&b.v);

    // Fluxes: u*u and v*v at centers, cross fluxes at corners.
    let fuu = uc_a.hadamard(&uc_b);
    let fvu = vd_a.hadamard(&ud_b);
    let fuv = ud_a.hadamard(&vd_b);
    let fvv = vc_a.hadamard(&vc_b);

    let mut cu = &fuu.shifted(1, 0) - &fuu;
    cu.scale_in_place(1.0 / g.hx);
    let mut cuy = &fvu - &fvu.shifted(0, -1);
    cuy.scale_in_place(1.0 / g.hy);
    cu.add_assign(&cuy);

    let mut cv = &fuv - &fuv.shifted(-1, 0);
    cv.scale_in_place(1.0 / g.hx);
    let mut cvy = &fvv.shifted(0, 1) - &fvv;
    cvy.scale_in_place(1.0 / g.hy);
    cv.add_assign(&cvy);

    StaggeredVelocity {
        grid: *g,
        u: cu,
        v: cv,
    }
}

/// Convective term `C(w) w` in divergence form with two-point averaged
/// fluxes (Harlow-Welch). For discretely divergence-free `w` the operator
/// is skew-symmetric: `<w, convection(w)> = 0` to round-off.
pub fn convection(vel: &StaggeredVelocity) -> StaggeredVelocity {
    convect_bilinear(vel, vel)
}

/// Directional derivative of `convection` at `vel` in direction `w`.
pub fn convection_jvp(vel: &StaggeredVelocity, w: &StaggeredVelocity) -> StaggeredVelocity {
    convect_bilinear(w, vel).add(&convect_bilinear(vel, w))
}

// Adjoint of `convect_bilinear` in one argument slot, holding the other
// fixed. `cot` is the cotangent on the output faces.
fn convect_bilinear_vjp(
    a: &StaggeredVelocity,
    b: &StaggeredVelocity,
    cot: &StaggeredVelocity,
) -> (StaggeredVelocity, StaggeredVelocity) {
    let g = &a.grid;
    let uc_a = u_at_centers(&a.u);
    let uc_b = u_at_centers(&b.u);
    let ud_a = u_at_corners(&a.u);
    let ud_b = u_at_corners(&b.u);
    let vc_a = v_at_centers(&a.v);
    let vc_b = v_at_centers(&b.v);
    let vd_a = v_at_corners(&a.v);
    let vd_b = v_at_corners(&b.v);

    // Cotangents on the four flux fields.
    let g_fuu = (&cot.u.shifted(-1, 0) - &cot.u).scale(1.0 / g.hx);
    let g_fvu = (&cot.u - &cot.u.shifted(0, 1)).scale(1.0 / g.hy);
    let g_fuv = (&cot.v - &cot.v.shifted(1, 0)).scale(1.0 / g.hx);
    let g_fvv = (&cot.v.shifted(0, -1) - &cot.v).scale(1.0 / g.hy);

    // Product rule, then undo the interpolations.
    let g_uc_a = g_fuu.hadamard(&uc_b);
    let g_uc_b = g_fuu.hadamard(&uc_a);
    let g_vd_a = g_fvu.hadamard(&ud_b);
    let g_ud_b = g_fvu.hadamard(&vd_a);
    let g_ud_a = g_fuv.hadamard(&vd_b);
    let g_vd_b = g_fuv.hadamard(&ud_a);
    let g_vc_a = g_fvv.hadamard(&vc_b);
    let g_vc_b = g_fvv.hadamard(&vc_a);

    let back_uc = |gf: &ScalarField| (&gf.shifted(1, 0) + gf).scale(0.5);
    let back_ud = |gf: &ScalarField| (gf + &gf.shifted(0, -1)).scale(0.5);
    let back_vc = |gf: &ScalarField| (&gf.shifted(0, 1) + gf).scale(0.5);
    let back_vd = |gf: &ScalarField| (gf + &gf.shifted(-1, 0)).scale(0.5);

    let mut a_bar_u = back_uc(&g_uc_a);
    a_bar_u.add_assign(&back_ud(&g_ud_a));
    let mut a_bar_v = back_vc(&g_vc_a);
    a_bar_v.add_assign(&back_vd(&g_vd_a));

    let mut b_bar_u = back_uc(&g_uc_b);
    b_bar_u.add_assign(&back_ud(&g_ud_b));
    let mut b_bar_v = back_vc(&g_vc_b);
    b_bar_v.add_assign(&back_vd(&g_vd_b));

    (
        StaggeredVelocity {
            grid: *g,
            u: a_bar_u,
            v: a_bar_v,
        },
        StaggeredVelocity {
            grid: *g,
            u: b_bar_u,
            v: b_bar_v,
        },
    )
}

/// Adjoint of the convection linearization: returns `(d convection / d vel)^T cot`.
pub fn convection_vjp(vel: &StaggeredVelocity, cot: &StaggeredVelocity) -> StaggeredVelocity {
    let (a_bar, b_bar) = convect_bilinear_vjp(vel, vel, cot);
    a_bar.add(&b_bar)
}

fn laplacian(f: &ScalarField, hx: f64, hy: f64) -> ScalarField {
    let mut lx = &(&f.shifted(1, 0) + &f.shifted(-1, 0)) - &f.scale(2.0);
    lx.scale_in_place(1.0 / (hx * hx));
    let mut ly = &(&f.shifted(0, 1) + &f.shifted(0, -1)) - &f.scale(2.0);
    ly.scale_in_place(1.0 / (hy * hy));
    lx.add_assign(&ly);
    lx
}

/// Diffusive term `nu * D w`: five-point Laplacian per component. `D` is
/// symmetric negative semi-definite; `<w, D w> = -||Q w||^2` with `Q` the
/// stack of forward differences scaled by `1/h`.
pub fn diffusion(vel: &StaggeredVelocity, nu: f64) -> StaggeredVelocity {
    assert!(nu >= 0.0, "viscosity must be non-negative");
    let g = &vel.grid;
    let mut u = laplacian(&vel.u, g.hx, g.hy);
    let mut v = laplacian(&vel.v, g.hx, g.hy);
    u.scale_in_place(nu);
    v.scale_in_place(nu);
    StaggeredVelocity { grid: *g, u, v }
}

/// `<w, D w>` evaluated through the Cholesky factor: minus the summed
/// squared forward differences scaled by `1/h`, per component. Used as an
/// independent route for the dissipation identity.
pub fn diffusion_quadratic_form(vel: &StaggeredVelocity) -> f64 {
    let g = &vel.grid;
    let mut total = 0.0;
    for f in [&vel.u, &vel.v] {
        let dx = (&f.shifted(1, 0) - f).scale(1.0 / g.hx);
        let dy = (&f.shifted(0, 1) - f).scale(1.0 / g.hy);
        total += dx.norm_sq() + dy.norm_sq();
    }
    -total
}

/// Pointwise body force at the staggered locations.
pub fn forcing_term(vel: &StaggeredVelocity, forcing: ForcingSpec, _t: f64) -> StaggeredVelocity {
    let g = &vel.grid;
    match forcing {
        ForcingSpec::None => StaggeredVelocity::zeros(*g),
        ForcingSpec::Kolmogorov => {
            let kappa = ForcingSpec::KOLMOGOROV_WAVENUMBER;
            let drag = ForcingSpec::KOLMOGOROV_DRAG;
            let u = ScalarField::from_fn(g.nx, g.ny, |i, j| {
                let (_, y) = g.u_pos(i, j);
                (kappa * y).sin() - drag * vel.u.get(i, j)
            });
            let v = vel.v.scale(-drag);
            StaggeredVelocity { grid: *g, u, v }
        }
    }
}

/// Adjoint of the forcing linearization with respect to the velocity.
pub fn forcing_vjp(forcing: ForcingSpec, cot: &StaggeredVelocity) -> StaggeredVelocity {
    match forcing {
        ForcingSpec::None => StaggeredVelocity::zeros(cot.grid),
        ForcingSpec::Kolmogorov => cot.scale(-ForcingSpec::KOLMOGOROV_DRAG),
    }
}

/// Pointwise momentum tendency `-C(w)w + nu D w + f` (velocity per time).
pub fn rhs_pointwise(
    vel: &StaggeredVelocity,
    nu: f64,
    forcing: ForcingSpec,
    t: f64,
) -> StaggeredVelocity {
    let mut out = convection(vel).scale(-1.0);
    if nu > 0.0 {
        out.add_assign(&diffusion(vel, nu));
    }
    if forcing != ForcingSpec::None {
        out.add_assign(&forcing_term(vel, forcing, t));
    }
    out
}

/// Volume-integrated momentum right-hand side
/// `m = -C(w)w + nu D w + Omega f`, i.e. `cell_volume * rhs_pointwise`.
pub fn rhs_m(
    vel: &StaggeredVelocity,
    nu: f64,
    forcing: ForcingSpec,
    t: f64,
) -> StaggeredVelocity {
    rhs_pointwise(vel, nu, forcing, t).scale(vel.grid.cell_volume)
}

/// Adjoint of the `rhs_pointwise` linearization.
pub fn rhs_pointwise_vjp(
    vel: &StaggeredVelocity,
    nu: f64,
    forcing: ForcingSpec,
    cot: &StaggeredVelocity,
) -> StaggeredVelocity {
    let mut out = convection_vjp(vel, cot).scale(-1.0);
    if nu > 0.0 {
        // The Laplacian is symmetric.
        out.add_assign(&diffusion(cot, nu));
    }
    if forcing != ForcingSpec::None {
        out.add_assign(&forcing_vjp(forcing, cot));
    }
    out
}

/// Total momentum `(Px, Py) = cell_volume * (sum u, sum v)`.
pub fn momentum(vel: &StaggeredVelocity) -> (f64, f64) {
    let w = vel.grid.cell_volume;
    (w * vel.u.sum(), w * vel.v.sum())
}

/// Total kinetic energy `E = 1/2 cell_volume * sum(u^2 + v^2)`.
pub fn kinetic_energy(vel: &StaggeredVelocity) -> f64 {
    0.5 * vel.grid.cell_volume * (vel.u.norm_sq() + vel.v.norm_sq())
}

/// Scalar vorticity at cell corners:
/// `(v_{i+1,j+1/2} - v_{i,j+1/2})/hx - (u_{i+1/2,j+1} - u_{i+1/2,j})/hy`.
pub fn vorticity(vel: &StaggeredVelocity) -> ScalarLattice {
    let g = &vel.grid;
    let mut w = &vel.v.shifted(1, 0) - &vel.v;
    w.scale_in_place(1.0 / g.hx);
    let mut wy = &vel.u.shifted(0, 1) - &vel.u;
    wy.scale_in_place(1.0 / g.hy);
    w.sub_assign(&wy);
    ScalarLattice::new(w, Staggering::Corner)
}

/// Divergence-free velocity from a discrete streamfunction at corners:
/// `u = d(psi)/dy`, `v = -d(psi)/dx` with compact differences. The discrete
/// divergence of the result vanishes identically, which makes this the
/// standard way to manufacture divergence-free test fields.
pub fn velocity_from_streamfunction(
    grid: crate::grid::Grid,
    psi: &ScalarField,
) -> StaggeredVelocity {
    assert_eq!((psi.nx(), psi.ny()), (grid.nx, grid.ny));
    let u = (psi - &psi.shifted(0, -1)).scale(1.0 / grid.hy);
    let v = (&psi.shifted(-1, 0) - psi).scale(1.0 / grid.hx);
    StaggeredVelocity { grid, u, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_field(nx: usize, ny: usize, rng: &mut ChaCha12Rng) -> ScalarField {
        ScalarField::from_fn(nx, ny, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_velocity(grid: Grid, rng: &mut ChaCha12Rng) -> StaggeredVelocity {
        StaggeredVelocity {
            grid,
            u: random_field(grid.nx, grid.ny, rng),
            v: random_field(grid.nx, grid.ny, rng),
        }
    }

    fn random_divfree(grid: Grid, rng: &mut ChaCha12Rng) -> StaggeredVelocity {
        let psi = random_field(grid.nx, grid.ny, rng);
        velocity_from_streamfunction(grid, &psi)
    }

    #[test]
    fn divergence_of_constant_field_is_zero() {
        let g = Grid::square(8);
        let vel = StaggeredVelocity::from_fn(g, |_, _| 1.0, |_, _| 1.0);
        assert_eq!(divergence(&vel).values.max_abs(), 0.0);
    }

    #[test]
    fn divergence_matches_analytic_derivative() {
        let g = Grid::square(64);
        let vel = StaggeredVelocity::from_fn(g, |x, _| x.sin(), |_, _| 0.0);
        let d = divergence(&vel);
        let mut max_err: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let x = g.x_center(i);
                max_err = max_err.max((d.values.get(i, j) - x.cos()).abs());
            }
        }
        // second-order: error ~ h^2 / 24
        assert!(max_err < 1e-3, "max_err = {max_err}");
        assert!(max_err > 1e-6);
    }

    #[test]
    fn streamfunction_velocity_is_discretely_divergence_free() {
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let vel = random_divfree(g, &mut rng);
        assert!(divergence(&vel).values.max_abs() < 1e-13);
    }

    #[test]
    fn gradient_divergence_adjoint_identity() {
        let g = Grid::square(8);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = PressureField::new(g, random_field(8, 8, &mut rng));
            let w = random_velocity(g, &mut rng);
            let lhs = gradient(&p).dot(&w);
            let rhs = -p.p.dot(&divergence(&w).values);
            let scale = p.p.norm_sq().sqrt() * w.norm_sq().sqrt();
            assert!((lhs - rhs).abs() <= 1e-12 * scale, "lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn gradient_of_cos_y() {
        let g = Grid::square(64);
        let p = PressureField::new(
            g,
            ScalarField::from_fn(g.nx, g.ny, |_, j| g.y_center(j).cos()),
        );
        let gr = gradient(&p);
        assert_eq!(gr.u.max_abs(), 0.0);
        let mut max_err: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let y = g.y_face(j);
                max_err = max_err.max((gr.v.get(i, j) + y.sin()).abs());
            }
        }
        assert!(max_err < 1e-3, "max_err = {max_err}");
    }

    #[test]
    fn convection_of_zero_is_zero() {
        let g = Grid::square(8);
        let vel = StaggeredVelocity::zeros(g);
        assert_eq!(convection(&vel).max_abs(), 0.0);
    }

    #[test]
    fn convection_skew_symmetry_on_divergence_free_fields() {
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let w = random_divfree(g, &mut rng);
            let e = w.dot(&convection(&w));
            let limit = 1e-10 * w.norm_sq() * g.cell_volume;
            assert!(e.abs() <= limit, "energy product {e} exceeds {limit}");
        }
    }

    #[test]
    fn convection_energy_product_nonzero_without_divergence_freeness() {
        // An x-linear ramp in u is not divergence-free (the periodic wrap
        // carries a jump), so skew-symmetry is not available.
        let g = Grid::square(16);
        let vel = StaggeredVelocity::from_fn(g, |x, _| x, |_, _| 0.0);
        let e = vel.dot(&convection(&vel));
        assert!(e.abs() > 1e-6, "expected nonzero energy product, got {e}");
    }

    #[test]
    fn convection_jvp_matches_finite_differences() {
        let g = Grid::square(8);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let vel = random_velocity(g, &mut rng);
        let w = random_velocity(g, &mut rng);
        let eps = 1e-6;
        let mut plus = vel.clone();
        plus.add_scaled(eps, &w);
        let mut minus = vel.clone();
        minus.add_scaled(-eps, &w);
        let fd = convection(&plus).sub(&convection(&minus)).scale(0.5 / eps);
        let jvp = convection_jvp(&vel, &w);
        let diff = fd.sub(&jvp);
        assert!(diff.max_abs() < 1e-7, "max diff {}", diff.max_abs());
    }

    #[test]
    fn convection_vjp_adjoint_dot_test() {
        let g = Grid::square(8);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..10 {
            let vel = random_velocity(g, &mut rng);
            let w = random_velocity(g, &mut rng);
            let c = random_velocity(g, &mut rng);
            let lhs = convection_jvp(&vel, &w).dot(&c);
            let rhs = w.dot(&convection_vjp(&vel, &c));
            let scale = w.norm_sq().sqrt() * c.norm_sq().sqrt();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * scale.max(1.0),
                "lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn diffusion_of_constant_is_zero() {
        let g = Grid::square(8);
        let vel = StaggeredVelocity::from_fn(g, |_, _| 3.5, |_, _| -1.25);
        assert!(diffusion(&vel, 0.7).max_abs() < 1e-13);
    }

    #[test]
    fn diffusion_cholesky_identity() {
        let g = Grid::square(8);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = random_velocity(g, &mut rng);
            let quad = w.dot(&diffusion(&w, 1.0));
            let via_q = diffusion_quadratic_form(&w);
            assert!(quad <= 0.0);
            assert!(
                (quad - via_q).abs() <= 1e-12 * quad.abs().max(1.0),
                "quad={quad} via_q={via_q}"
            );
        }
    }

    #[test]
    fn diffusion_matches_analytic_laplacian() {
        let g = Grid::square(64);
        let vel = StaggeredVelocity::from_fn(g, |x, _| x.sin(), |_, _| 0.0);
        let d = diffusion(&vel, 1.0);
        let mut max_err: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let x = g.x_face(i);
                max_err = max_err.max((d.u.get(i, j) + x.sin()).abs());
            }
        }
        assert!(max_err < 1e-2, "max_err = {max_err}");
    }

    #[test]
    fn rhs_of_rest_state_is_zero() {
        let g = Grid::square(8);
        let vel = StaggeredVelocity::zeros(g);
        assert_eq!(rhs_m(&vel, 0.0, ForcingSpec::None, 0.0).max_abs(), 0.0);
    }

    #[test]
    fn kolmogorov_forcing_enters_rhs_volume_scaled() {
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let vel = random_velocity(g, &mut rng);
        let forced = rhs_m(&vel, 0.0, ForcingSpec::Kolmogorov, 0.0);
        let unforced = rhs_m(&vel, 0.0, ForcingSpec::None, 0.0);
        let diff = forced.sub(&unforced);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (_, y) = g.u_pos(i, j);
                let expect_u = g.cell_volume * ((4.0 * y).sin() - 0.1 * vel.u.get(i, j));
                let expect_v = g.cell_volume * (-0.1 * vel.v.get(i, j));
                assert!((diff.u.get(i, j) - expect_u).abs() < 1e-13);
                assert!((diff.v.get(i, j) - expect_v).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rhs_momentum_column_sums_vanish() {
        // 1^T (-C(w)w + nu D w) = 0 per component, for arbitrary w.
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10 {
            let w = random_velocity(g, &mut rng);
            let r = rhs_pointwise(&w, 0.37, ForcingSpec::None, 0.0);
            let scale = r.u.as_slice().iter().map(|x| x.abs()).sum::<f64>() / r.u.len() as f64;
            assert!(r.u.sum().abs() <= 1e-10 * scale.max(1.0) * r.u.len() as f64);
            assert!(r.v.sum().abs() <= 1e-10 * scale.max(1.0) * r.v.len() as f64);
        }
    }

    #[test]
    fn conserved_quantities_closed_form() {
        let g = Grid::square(32);
        let vel = StaggeredVelocity::from_fn(g, |_, _| 2.0, |_, _| 0.0);
        let (px, py) = momentum(&vel);
        let area = g.area();
        assert!((px - 2.0 * area).abs() < 1e-10);
        assert!(py.abs() < 1e-12);
        assert!((kinetic_energy(&vel) - 0.5 * 4.0 * area).abs() < 1e-10);

        let rest = StaggeredVelocity::zeros(g);
        assert_eq!(momentum(&rest), (0.0, 0.0));
        assert_eq!(kinetic_energy(&rest), 0.0);
        assert_eq!(vorticity(&rest).values.max_abs(), 0.0);
    }

    #[test]
    fn vorticity_of_solid_body_rotation() {
        // u = -y, v = x is linear, so interior corner differences are exact.
        // The wrap row and column see the periodic jump and are excluded.
        let g = Grid::square(32);
        let vel = StaggeredVelocity::from_fn(g, |_, y| -y, |x, _| x);
        let w = vorticity(&vel);
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                assert!(
                    (w.values.get(i, j) - 2.0).abs() < 1e-12,
                    "omega({i},{j}) = {}",
                    w.values.get(i, j)
                );
            }
        }
    }

    #[test]
    fn operators_commute_with_periodic_shifts_bitwise() {
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let vel = random_velocity(g, &mut rng);
        let (a, b) = (5, -3);
        let shifted = vel.shifted(a, b);

        assert_eq!(
            convection(&shifted),
            convection(&vel).shifted(a, b),
            "convection"
        );
        assert_eq!(
            diffusion(&shifted, 0.3),
            diffusion(&vel, 0.3).shifted(a, b),
            "diffusion"
        );
        assert_eq!(
            divergence(&shifted).values,
            divergence(&vel).values.shifted(a, b),
            "divergence"
        );
        assert_eq!(
            vorticity(&shifted).values,
            vorticity(&vel).values.shifted(a, b),
            "vorticity"
        );
    }
}
