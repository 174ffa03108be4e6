//! Periodic 2D cross-correlation over channel lists, plus its exact adjoint.
//!
//! The convolution is lowered to a single GEMM: the input channels are
//! expanded into shifted copies (one per kernel tap, each a contiguous
//! memcpy thanks to the periodic lattice), and the weight matrix multiplies
//! that stack. The adjoint reuses the same expansion, so the kernel and
//! input gradients are two more GEMMs. All accumulation orders are fixed,
//! which keeps evaluations deterministic and bit-for-bit shift equivariant.

use crate::field::ScalarField;
use std::cell::RefCell;

// Work buffers reused across calls. The expanded input alone is
// `in_ch * taps * n` doubles (tens of megabytes for the standard network),
// large enough that per-call allocation would go through mmap every time.
thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

#[derive(Default)]
struct Scratch {
    store: Vec<f64>,
    gemm_out: Vec<f64>,
    cot: Vec<f64>,
    da: Vec<f64>,
}

fn grown(buf: &mut Vec<f64>, len: usize) -> &mut [f64] {
    if buf.len() < len {
        buf.resize(len, 0.0);
    }
    &mut buf[..len]
}

/// Channel and stencil extents of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDims {
    pub in_ch: usize,
    pub out_ch: usize,
    pub radius: usize,
}

impl ConvDims {
    /// Taps per kernel: `(2r + 1)^2`.
    pub fn kernel_len(&self) -> usize {
        let k = 2 * self.radius + 1;
        k * k
    }

    /// Total weight count `out_ch * in_ch * (2r + 1)^2`.
    pub fn weight_count(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel_len()
    }

    /// Offsets `(dx, dy)` in tap order (y outer, x inner).
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> {
        let r = self.radius as isize;
        (-r..=r).flat_map(move |dy| (-r..=r).map(move |dx| (dx, dy)))
    }
}

fn dgemm_checked(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    debug_assert!(a.len() >= (m - 1) * rsa.unsigned_abs() + (k - 1) * csa.unsigned_abs() + 1);
    debug_assert!(b.len() >= (k - 1) * rsb.unsigned_abs() + (n - 1) * csb.unsigned_abs() + 1);
    debug_assert!(c.len() >= (m - 1) * rsc.unsigned_abs() + (n - 1) * csc.unsigned_abs() + 1);
    // Safety: strides describe in-bounds layouts of the checked slices and
    // the output does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Expanded input: one contiguous row of length `n` per (channel, tap)
/// pair, written into the reusable buffer.
fn expand_shifted_into(dims: &ConvDims, input: &[ScalarField], store: &mut [f64]) {
    let n = input[0].len();
    let kk = dims.kernel_len();
    debug_assert_eq!(store.len(), dims.in_ch * kk * n);
    for (c, field) in input.iter().enumerate() {
        for (o, (dx, dy)) in dims.offsets().enumerate() {
            field.write_shifted_into(dx, dy, &mut store[(c * kk + o) * n..(c * kk + o + 1) * n]);
        }
    }
}

/// Periodic cross-correlation:
/// `out[o][i,j] = bias[o] + sum_c sum_{k,l} w[o][c][k,l] * in[c][i+k, j+l]`.
///
/// Weights are laid out `[out_ch][in_ch][tap]`; `bias` may be empty for a
/// purely linear convolution.
pub fn conv2d_periodic(
    dims: &ConvDims,
    weights: &[f64],
    bias: &[f64],
    input: &[ScalarField],
) -> Vec<ScalarField> {
    assert_eq!(input.len(), dims.in_ch, "input channel count");
    assert_eq!(weights.len(), dims.weight_count(), "weight count");
    assert!(bias.is_empty() || bias.len() == dims.out_ch, "bias count");
    let (nx, ny) = (input[0].nx(), input[0].ny());
    let n = nx * ny;
    let ck = dims.in_ch * dims.kernel_len();

    SCRATCH.with(|scratch| {
        let scratch = &mut *scratch.borrow_mut();
        let store = grown(&mut scratch.store, ck * n);
        expand_shifted_into(dims, input, store);
        let out_buf = grown(&mut scratch.gemm_out, dims.out_ch * n);
        // C[N x out] = A[N x ck] W[ck x out]. `store` holds A column-major
        // (one contiguous row per tap) and `weights` holds W^T row-major;
        // the strides below express both without copying. The tall-m
        // orientation is what the GEMM kernels prefer.
        dgemm_checked(
            n,
            ck,
            dims.out_ch,
            store,
            1,
            n as isize,
            weights,
            1,
            ck as isize,
            out_buf,
            dims.out_ch as isize,
            1,
        );

        (0..dims.out_ch)
            .map(|o| {
                let b = if bias.is_empty() { 0.0 } else { bias[o] };
                let mut data = Vec::with_capacity(n);
                data.extend(
                    out_buf[o..]
                        .iter()
                        .step_by(dims.out_ch)
                        .map(|x| x + b),
                );
                ScalarField::from_vec(nx, ny, data)
            })
            .collect()
    })
}

/// Gradients of a convolution application.
pub struct ConvVjp {
    pub d_input: Vec<ScalarField>,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

/// Adjoint of [`conv2d_periodic`] at `input`: given the cotangent on the
/// output channels, produce cotangents on input, weights and bias. The
/// returned pieces satisfy the usual dot-product identities.
pub fn conv2d_vjp(
    dims: &ConvDims,
    weights: &[f64],
    input: &[ScalarField],
    cot: &[ScalarField],
) -> ConvVjp {
    assert_eq!(input.len(), dims.in_ch);
    assert_eq!(cot.len(), dims.out_ch);
    let (nx, ny) = (input[0].nx(), input[0].ny());
    let n = nx * ny;
    let kk = dims.kernel_len();
    let ck = dims.in_ch * kk;

    SCRATCH.with(|scratch| {
        let scratch = &mut *scratch.borrow_mut();
        let cot_buf = grown(&mut scratch.cot, dims.out_ch * n);
        for (c, dst) in cot.iter().zip(cot_buf.chunks_mut(n)) {
            dst.copy_from_slice(c.as_slice());
        }

        // dW^T[ck][o] = sum_p store[ck][p] * cot[o][p], transposed into the
        // [out][ck] kernel layout afterwards (tall-m orientation again).
        let store = grown(&mut scratch.store, ck * n);
        expand_shifted_into(dims, input, store);
        let mut dwt = vec![0.0; dims.weight_count()];
        dgemm_checked(
            ck,
            n,
            dims.out_ch,
            store,
            n as isize,
            1,
            cot_buf,
            1,
            n as isize,
            &mut dwt,
            dims.out_ch as isize,
            1,
        );
        let mut d_weights = vec![0.0; dims.weight_count()];
        for j in 0..ck {
            for o in 0..dims.out_ch {
                d_weights[o * ck + j] = dwt[j * dims.out_ch + o];
            }
        }

        // dA[p][ck] = sum_o cot[o][p] * W[o][ck], written tap-row-major so
        // the shifted rows fold back onto the input lattice contiguously.
        let da = grown(&mut scratch.da, ck * n);
        dgemm_checked(
            n,
            dims.out_ch,
            ck,
            cot_buf,
            1,
            n as isize,
            weights,
            ck as isize,
            1,
            da,
            1,
            n as isize,
        );
        let mut d_input = Vec::with_capacity(dims.in_ch);
        for c in 0..dims.in_ch {
            let mut acc = ScalarField::zeros(nx, ny);
            for (o, (dx, dy)) in dims.offsets().enumerate() {
                let row = &da[(c * kk + o) * n..(c * kk + o + 1) * n];
                acc.add_shifted_slice(row, -dx, -dy);
            }
            d_input.push(acc);
        }

        let d_bias = cot.iter().map(|c| c.sum()).collect();

        ConvVjp {
            d_input,
            d_weights,
            d_bias,
        }
    })
}
