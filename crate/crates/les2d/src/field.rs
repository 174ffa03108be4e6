//! Scalar lattices on the staggered grid.

use std::ops::{Add, Mul, Neg, Sub};

/// Where on the staggered cell a scalar lattice lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Staggering {
    /// Cell centers (pressure, normal stresses).
    Center,
    /// East cell faces (u-component).
    EastFace,
    /// North cell faces (v-component).
    NorthFace,
    /// North-east cell corners (vorticity, shear stress).
    Corner,
}

/// An `nx` by `ny` lattice of scalars, stored row-major with x fastest
/// (index `(i, j)` maps to `j * nx + i`). All lattices are periodic; the
/// staggered location of the samples is tracked by the caller or by a
/// [`ScalarLattice`] wrapper.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        ScalarField {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        ScalarField {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        ScalarField { nx, ny, data }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny);
        ScalarField { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    /// Periodic accessor; `i`, `j` may be any integers.
    #[inline]
    pub fn get_periodic(&self, i: isize, j: isize) -> f64 {
        let ii = i.rem_euclid(self.nx as isize) as usize;
        let jj = j.rem_euclid(self.ny as isize) as usize;
        self.data[jj * self.nx + ii]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Periodically shifted copy: `out[i, j] = self[i + di, j + dj]`.
    pub fn shifted(&self, di: isize, dj: isize) -> ScalarField {
        let (nx, ny) = (self.nx, self.ny);
        let sx = di.rem_euclid(nx as isize) as usize;
        let sy = dj.rem_euclid(ny as isize) as usize;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let jj = (j + sy) % ny;
            let row = &self.data[jj * nx..(jj + 1) * nx];
            out.extend_from_slice(&row[sx..]);
            out.extend_from_slice(&row[..sx]);
        }
        ScalarField { nx, ny, data: out }
    }

    /// Write the shifted copy into an existing buffer (no allocation).
    pub fn write_shifted_into(&self, di: isize, dj: isize, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(out.len(), nx * ny);
        let sx = di.rem_euclid(nx as isize) as usize;
        let sy = dj.rem_euclid(ny as isize) as usize;
        for j in 0..ny {
            let jj = (j + sy) % ny;
            let row = &self.data[jj * nx..(jj + 1) * nx];
            let dst = &mut out[j * nx..(j + 1) * nx];
            dst[..nx - sx].copy_from_slice(&row[sx..]);
            dst[nx - sx..].copy_from_slice(&row[..sx]);
        }
    }

    /// `self[i, j] += src[i + di, j + dj]` with `src` in this lattice's
    /// layout (no allocation).
    pub fn add_shifted_slice(&mut self, src: &[f64], di: isize, dj: isize) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(src.len(), nx * ny);
        let sx = di.rem_euclid(nx as isize) as usize;
        let sy = dj.rem_euclid(ny as isize) as usize;
        for j in 0..ny {
            let jj = (j + sy) % ny;
            let row = &src[jj * nx..(jj + 1) * nx];
            let dst = &mut self.data[j * nx..(j + 1) * nx];
            for (d, s) in dst[..nx - sx].iter_mut().zip(&row[sx..]) {
                *d += s;
            }
            for (d, s) in dst[nx - sx..].iter_mut().zip(&row[..sx]) {
                *d += s;
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &ScalarField) -> ScalarField {
        assert!(self.same_shape(other));
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        self.map(|x| k * x)
    }

    pub fn scale_in_place(&mut self, k: f64) {
        for x in &mut self.data {
            *x *= k;
        }
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: f64, other: &ScalarField) {
        assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    pub fn add_assign(&mut self, other: &ScalarField) {
        self.add_scaled(1.0, other);
    }

    pub fn sub_assign(&mut self, other: &ScalarField) {
        self.add_scaled(-1.0, other);
    }

    /// Unweighted inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Squared 2-norm of the entries.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

/// A scalar lattice together with its staggered location.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLattice {
    pub values: ScalarField,
    pub staggering: Staggering,
}

impl ScalarLattice {
    pub fn new(values: ScalarField, staggering: Staggering) -> Self {
        ScalarLattice { values, staggering }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_order_is_x_fastest() {
        let f = ScalarField::from_fn(3, 2, |i, j| (10 * j + i) as f64);
        assert_eq!(f.as_slice(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(f.get(2, 1), 12.0);
    }

    #[test]
    fn shifted_wraps_periodically() {
        let f = ScalarField::from_fn(4, 3, |i, j| (10 * j + i) as f64);
        let s = f.shifted(1, -1);
        for j in 0..3 {
            for i in 0..4 {
                assert_eq!(
                    s.get(i, j),
                    f.get_periodic(i as isize + 1, j as isize - 1),
                    "mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn shift_adjoint_identity() {
        // <shift(a), b> == <a, shift^{-1}(b)>
        let a = ScalarField::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let b = ScalarField::from_fn(5, 4, |i, j| ((i * 5 + j * 13) % 7) as f64 - 3.0);
        let lhs = a.shifted(2, 3).dot(&b);
        let rhs = a.dot(&b.shifted(-2, -3));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
