//! Minimal 2D complex FFT on the lattice layout (x fastest), shared by the
//! Poisson solver and the spectrum diagnostics.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_x: planner.plan_fft_inverse(nx),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    fn transform(&self, data: &mut [Complex<f64>], x_plan: &Arc<dyn Fft<f64>>, y_plan: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(data.len(), nx * ny);
        // rows are contiguous in x
        x_plan.process(data);
        // columns via transpose, batch FFT, transpose back
        let mut t = vec![Complex::default(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = data[j * nx + i];
            }
        }
        y_plan.process(&mut t);
        for j in 0..ny {
            for i in 0..nx {
                data[j * nx + i] = t[i * ny + j];
            }
        }
    }

    /// Unnormalized forward DFT of real data, layout `j * nx + i`.
    pub fn forward(&self, real: &[f64]) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> = real.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.transform(&mut data, &self.fwd_x, &self.fwd_y);
        data
    }

    /// Inverse DFT including the `1/(nx*ny)` normalization; returns the real
    /// part.
    pub fn inverse_real(&self, mut data: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut data, &self.inv_x, &self.inv_y);
        let norm = 1.0 / (self.nx * self.ny) as f64;
        data.iter().map(|c| c.re * norm).collect()
    }

    /// Signed integer wavenumber for DFT index `k` of `n` samples.
    pub fn signed_wavenumber(k: usize, n: usize) -> i64 {
        if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }
}
