//! Uniform periodic staggered grid.

/// Uniform periodic grid of `nx` by `ny` cells covering a rectangle of size
/// `lx` by `ly` centered at the origin.
///
/// Velocity components live on cell faces, pressure at cell centers
/// (marker-and-cell layout). The grid is periodic in both directions; no
/// boundary cells are stored. Because the grid is uniform, the cell-volume
/// matrix is a scalar multiple of the identity and is stored as the scalar
/// `cell_volume`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
    pub cell_volume: f64,
}

impl Grid {
    /// Grid over `[-lx/2, lx/2] x [-ly/2, ly/2]`. Requires `nx, ny >= 4`.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        assert!(nx >= 4 && ny >= 4, "grid needs at least 4 cells per direction");
        assert!(lx > 0.0 && ly > 0.0, "domain lengths must be positive");
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        Grid {
            nx,
            ny,
            lx,
            ly,
            hx,
            hy,
            cell_volume: hx * hy,
        }
    }

    /// Square grid on `[-pi, pi]^2`, the domain used by all experiments.
    pub fn square(n: usize) -> Self {
        Self::new(n, n, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Total domain area.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    fn x0(&self) -> f64 {
        -0.5 * self.lx
    }

    fn y0(&self) -> f64 {
        -0.5 * self.ly
    }

    /// x at the center of cell column `i`.
    pub fn x_center(&self, i: usize) -> f64 {
        self.x0() + (i as f64 + 0.5) * self.hx
    }

    /// y at the center of cell row `j`.
    pub fn y_center(&self, j: usize) -> f64 {
        self.y0() + (j as f64 + 0.5) * self.hy
    }

    /// x at the east face of cell column `i` (u-component location).
    pub fn x_face(&self, i: usize) -> f64 {
        self.x0() + (i as f64 + 1.0) * self.hx
    }

    /// y at the north face of cell row `j` (v-component location).
    pub fn y_face(&self, j: usize) -> f64 {
        self.y0() + (j as f64 + 1.0) * self.hy
    }

    /// Location of the u-component sample `(i, j)`: east face, row center.
    pub fn u_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x_face(i), self.y_center(j))
    }

    /// Location of the v-component sample `(i, j)`: column center, north face.
    pub fn v_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x_center(i), self.y_face(j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_spacing() {
        let g = Grid::square(8);
        assert_eq!(g.nx, 8);
        assert!((g.hx - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!((g.cell_volume - g.hx * g.hy).abs() < 1e-15);
        assert!((g.area() - 4.0 * std::f64::consts::PI * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn staggered_positions() {
        let g = Grid::square(4);
        // east face of the last column wraps to the right edge of the domain
        assert!((g.x_face(3) - std::f64::consts::PI).abs() < 1e-15);
        let (xu, yu) = g.u_pos(0, 0);
        assert!((xu - (-std::f64::consts::PI + g.hx)).abs() < 1e-15);
        assert!((yu - (-std::f64::consts::PI + 0.5 * g.hy)).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn too_small_grid_rejected() {
        Grid::new(2, 8, 1.0, 1.0);
    }
}
