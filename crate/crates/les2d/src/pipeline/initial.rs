//! Random band-limited initial conditions.

use crate::field::ScalarField;
use crate::grid::Grid;
use crate::projection::PoissonSolver;
use crate::velocity::StaggeredVelocity;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Complex exponential tables per wavenumber for one coordinate axis.
fn phase_table(k_range: i64, coords: &[f64]) -> Vec<Vec<(f64, f64)>> {
    (-k_range..=k_range)
        .map(|k| {
            coords
                .iter()
                .map(|&x| {
                    let phi = k as f64 * x;
                    (phi.cos(), phi.sin())
                })
                .collect()
        })
        .collect()
}

/// One band-limited random component sampled at the given staggered
/// positions: the real part of a sum of Fourier modes with
/// `0 < |kappa| < kappa_max`, coefficients' real and imaginary parts drawn
/// uniformly from `(-1, 1)`. The draw order (ky outer, kx inner, ascending)
/// is part of the reproducibility contract.
fn band_limited_component(
    grid: Grid,
    rng: &mut ChaCha12Rng,
    kappa_max: usize,
    xs: &[f64],
    ys: &[f64],
) -> ScalarField {
    let k = kappa_max as i64;
    let ex = phase_table(k, xs);
    let ey = phase_table(k, ys);
    let mut data = vec![0.0; grid.nx * grid.ny];
    let k_sq_max = (kappa_max * kappa_max) as i64;
    for ky in -k..=k {
        for kx in -k..=k {
            let k_sq = kx * kx + ky * ky;
            if k_sq == 0 || k_sq >= k_sq_max {
                continue;
            }
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            let tx = &ex[(kx + k) as usize];
            let ty = &ey[(ky + k) as usize];
            for j in 0..grid.ny {
                let (cy, sy) = ty[j];
                let row = &mut data[j * grid.nx..(j + 1) * grid.nx];
                for (i, value) in row.iter_mut().enumerate() {
                    let (cx, sx) = tx[i];
                    // Re((re + i im) * e^{i kappa . x})
                    let c = cx * cy - sx * sy;
                    let s = sx * cy + cx * sy;
                    *value += re * c - im * s;
                }
            }
        }
    }
    ScalarField::from_vec(grid.nx, grid.ny, data)
}

/// Band-limited random velocity scaled so the normalized kinetic energy
/// `1/(2|domain|) * integral ||u||^2` equals `target_energy`, before
/// projection.
pub fn band_limited_velocity(
    grid: Grid,
    seed: u64,
    kappa_max: usize,
    target_energy: f64,
) -> StaggeredVelocity {
    assert!(
        2 * kappa_max < grid.nx.min(grid.ny),
        "kappa_max must stay below the resolvable band"
    );
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let xs_u: Vec<f64> = (0..grid.nx).map(|i| grid.x_face(i)).collect();
    let ys_u: Vec<f64> = (0..grid.ny).map(|j| grid.y_center(j)).collect();
    let u = band_limited_component(grid, &mut rng, kappa_max, &xs_u, &ys_u);

    let xs_v: Vec<f64> = (0..grid.nx).map(|i| grid.x_center(i)).collect();
    let ys_v: Vec<f64> = (0..grid.ny).map(|j| grid.y_face(j)).collect();
    let v = band_limited_component(grid, &mut rng, kappa_max, &xs_v, &ys_v);

    let mut vel = StaggeredVelocity { grid, u, v };
    let ke_normalized = (vel.u.norm_sq() + vel.v.norm_sq()) / (2.0 * grid.num_cells() as f64);
    vel.scale_in_place((target_energy / ke_normalized).sqrt());
    vel
}

/// Random initial condition: band-limited, energy-normalized, then
/// projected onto the divergence-free subspace. The projector acts
/// mode-by-mode in Fourier space, so the band limit survives projection.
pub fn random_initial_condition(
    solver: &PoissonSolver,
    seed: u64,
    kappa_max: usize,
    target_energy: f64,
) -> StaggeredVelocity {
    solver.project(&band_limited_velocity(
        *solver.grid(),
        seed,
        kappa_max,
        target_energy,
    ))
}
