//! Neural closure models: the plain CNN closure, the divergence-form CNN
//! closure, the skew-symmetric closure, and eddy-viscosity clipping.
//!
//! The skew-symmetric closure is
//!
//! `c = (K - K^T) u - Q^T Q u`,   `K = B1^T diag(k) B2`,   `Q = diag(q) B3`,
//!
//! where `k = (k1, k2)` and `q = (q1, q2)` are CNN output channels acting on
//! the u and v face lattices, and the `B` matrices are bias-free two-channel
//! periodic convolutions whose sub-kernels are reparameterized to zero sum.
//! The skew part cancels in the energy balance and the `Q` part contributes
//! `-||q . B3 u||^2`, so the closure can only redistribute or dissipate
//! resolved energy; zero-sum kernels make both `B` and `B^T` annihilate
//! constants, which conserves momentum.

use crate::closures::smagorinsky::strain_divergence;
use crate::closures::ClosureContext;
use crate::field::ScalarField;
use crate::nn::cnn::{self, CnnSpec};
use crate::nn::conv::{conv2d_periodic, conv2d_vjp, ConvDims};
use crate::ops::{rhs_pointwise, rhs_pointwise_vjp};
use crate::velocity::StaggeredVelocity;

/// Which terms of the skew-symmetric closure are active (ablation support).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewTerms {
    Both,
    KOnly,
    QOnly,
}

/// Dimensions of one `B` matrix: a bias-free 2->2 channel convolution of
/// radius 2.
pub const B_DIMS: ConvDims = ConvDims {
    in_ch: 2,
    out_ch: 2,
    radius: 2,
};

/// Raw parameter count of one `B` matrix.
pub const B_PARAMS: usize = 100; // 2 * 2 * 25

/// Remove the mean of a square kernel so its taps sum to zero. Idempotent;
/// gradients flow through the subtraction.
pub fn zero_sum_reparam(raw: &[f64]) -> Vec<f64> {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.iter().map(|w| w - mean).collect()
}

/// Adjoint of [`zero_sum_reparam`]: the projection is symmetric.
fn zero_sum_reparam_vjp(grad: &[f64]) -> Vec<f64> {
    zero_sum_reparam(grad)
}

/// Apply the reparameterization to every sub-kernel of a `B` weight block.
fn reparam_block(raw: &[f64]) -> Vec<f64> {
    let kk = B_DIMS.kernel_len();
    assert_eq!(raw.len(), B_PARAMS);
    let mut out = Vec::with_capacity(raw.len());
    for kernel in raw.chunks(kk) {
        out.extend(zero_sum_reparam(kernel));
    }
    out
}

fn reparam_block_vjp(grad: &[f64]) -> Vec<f64> {
    let kk = B_DIMS.kernel_len();
    let mut out = Vec::with_capacity(grad.len());
    for kernel in grad.chunks(kk) {
        out.extend(zero_sum_reparam_vjp(kernel));
    }
    out
}

/// Exact transpose of a two-channel convolution: swapped channel blocks and
/// flipped kernels (tap `t` maps to `kk - 1 - t`).
fn transpose_block(w: &[f64]) -> Vec<f64> {
    let kk = B_DIMS.kernel_len();
    let mut out = vec![0.0; w.len()];
    for o in 0..2 {
        for c in 0..2 {
            for t in 0..kk {
                out[(c * 2 + o) * kk + (kk - 1 - t)] = w[(o * 2 + c) * kk + t];
            }
        }
    }
    out
}

fn b_apply(w: &[f64], x: &[ScalarField]) -> Vec<ScalarField> {
    conv2d_periodic(&B_DIMS, w, &[], x)
}

/// CNN input channels: the velocity components and the resolved pointwise
/// tendency.
pub fn cnn_input(vel: &StaggeredVelocity, ctx: &ClosureContext) -> Vec<ScalarField> {
    let r = rhs_pointwise(vel, ctx.nu, ctx.forcing, ctx.t);
    vec![vel.u.clone(), vel.v.clone(), r.u, r.v]
}

/// Adjoint of the input construction: fold channel cotangents back onto the
/// velocity.
fn cnn_input_vjp(
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    d_channels: &[ScalarField],
) -> StaggeredVelocity {
    let grid = vel.grid;
    let r_cot = StaggeredVelocity {
        grid,
        u: d_channels[2].clone(),
        v: d_channels[3].clone(),
    };
    let mut out = rhs_pointwise_vjp(vel, ctx.nu, ctx.forcing, &r_cot);
    out.u.add_assign(&d_channels[0]);
    out.v.add_assign(&d_channels[1]);
    out
}

/// Unconstrained CNN closure: the network output is the closure.
pub fn cnn_closure(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> StaggeredVelocity {
    cnn_closure_traced(spec, theta, vel, ctx).0
}

/// [`cnn_closure`] that also returns the forward trace for a later adjoint.
pub fn cnn_closure_traced(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> (StaggeredVelocity, cnn::CnnTrace) {
    assert_eq!(spec.out_channels(), 2, "CNN closure needs 2 output channels");
    let (out, trace) = cnn::forward_traced(spec, theta, &cnn_input(vel, ctx));
    let mut it = out.into_iter();
    (
        StaggeredVelocity {
            grid: vel.grid,
            u: it.next().unwrap(),
            v: it.next().unwrap(),
        },
        trace,
    )
}

/// Adjoint of [`cnn_closure`]: accumulates parameter gradients and returns
/// the velocity cotangent.
pub fn cnn_closure_vjp(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    trace: &cnn::CnnTrace,
    cot: &StaggeredVelocity,
    d_theta: &mut [f64],
) -> StaggeredVelocity {
    let d_in = cnn::backward(
        spec,
        theta,
        trace,
        &[cot.u.clone(), cot.v.clone()],
        d_theta,
    );
    cnn_input_vjp(vel, ctx, &d_in)
}

/// Divergence-form CNN closure: the network predicts the symmetric stress
/// tensor (channels `t11, t22, t12`), whose staggered divergence is the
/// closure. Momentum conserving by construction.
pub fn div_closure(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> StaggeredVelocity {
    div_closure_traced(spec, theta, vel, ctx).0
}

pub fn div_closure_traced(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> (StaggeredVelocity, cnn::CnnTrace) {
    assert_eq!(spec.out_channels(), 3, "DIV closure needs 3 output channels");
    let (out, trace) = cnn::forward_traced(spec, theta, &cnn_input(vel, ctx));
    (
        crate::closures::strain::tensor_divergence(vel.grid, &out[0], &out[1], &out[2]),
        trace,
    )
}

pub fn div_closure_vjp(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    trace: &cnn::CnnTrace,
    cot: &StaggeredVelocity,
    d_theta: &mut [f64],
) -> StaggeredVelocity {
    let (t11_bar, t22_bar, t12_bar) =
        crate::closures::strain::tensor_divergence_vjp(vel.grid, cot);
    let d_in = cnn::backward(spec, theta, trace, &[t11_bar, t22_bar, t12_bar], d_theta);
    cnn_input_vjp(vel, ctx, &d_in)
}

/// Parameter layout of the skew-symmetric closure: the CNN parameters
/// followed by the raw (pre-reparameterization) `B1`, `B2`, `B3` blocks.
pub fn skew_param_count(spec: &CnnSpec) -> usize {
    spec.param_count() + 3 * B_PARAMS
}

fn split_skew_params<'a>(spec: &CnnSpec, theta: &'a [f64]) -> (&'a [f64], [&'a [f64]; 3]) {
    assert_eq!(theta.len(), skew_param_count(spec), "skew parameter count");
    let n = spec.param_count();
    (
        &theta[..n],
        [
            &theta[n..n + B_PARAMS],
            &theta[n + B_PARAMS..n + 2 * B_PARAMS],
            &theta[n + 2 * B_PARAMS..n + 3 * B_PARAMS],
        ],
    )
}

/// Initial parameters for the skew closure: CNN init followed by small
/// uniform raw `B` weights.
pub fn skew_init_params(spec: &CnnSpec, seed: u64) -> Vec<f64> {
    use rand::{RngExt, SeedableRng};
    let mut params = spec.init_params(seed);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x736b_6577);
    let scale = (1.0 / (2.0 * B_DIMS.kernel_len() as f64)).sqrt();
    for _ in 0..3 * B_PARAMS {
        params.push(rng.random_range(-scale..scale));
    }
    params
}

fn mul_channels(k: &[ScalarField], x: &[ScalarField]) -> Vec<ScalarField> {
    vec![k[0].hadamard(&x[0]), k[1].hadamard(&x[1])]
}

/// Skew-symmetric closure evaluation.
pub fn skew_closure(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    terms: SkewTerms,
) -> StaggeredVelocity {
    skew_closure_traced(spec, theta, vel, ctx, terms).0
}

/// [`skew_closure`] that also returns the network trace for a later adjoint.
pub fn skew_closure_traced(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    terms: SkewTerms,
) -> (StaggeredVelocity, cnn::CnnTrace) {
    assert_eq!(spec.out_channels(), 4, "SKEW closure needs 4 output channels");
    let (cnn_theta, b_raw) = split_skew_params(spec, theta);
    let (outs, trace) = cnn::forward_traced(spec, cnn_theta, &cnn_input(vel, ctx));
    let k = &outs[0..2];
    let q = &outs[2..4];
    let x = [vel.u.clone(), vel.v.clone()];

    let b1 = reparam_block(b_raw[0]);
    let b2 = reparam_block(b_raw[1]);
    let b3 = reparam_block(b_raw[2]);

    let mut acc_u = ScalarField::zeros(vel.grid.nx, vel.grid.ny);
    let mut acc_v = ScalarField::zeros(vel.grid.nx, vel.grid.ny);

    if terms != SkewTerms::QOnly {
        // (K - K^T) u = B1^T (k . B2 u) - B2^T (k . B1 u)
        let s2 = b_apply(&b2, &x);
        let t1 = b_apply(&transpose_block(&b1), &mul_channels(k, &s2));
        let s1 = b_apply(&b1, &x);
        let t2 = b_apply(&transpose_block(&b2), &mul_channels(k, &s1));
        acc_u.add_assign(&t1[0]);
        acc_u.sub_assign(&t2[0]);
        acc_v.add_assign(&t1[1]);
        acc_v.sub_assign(&t2[1]);
    }
    if terms != SkewTerms::KOnly {
        // -Q^T Q u = -B3^T (q^2 . B3 u)
        let s3 = b_apply(&b3, &x);
        let q_sq = [q[0].hadamard(&q[0]), q[1].hadamard(&q[1])];
        let t3 = b_apply(&transpose_block(&b3), &mul_channels(&q_sq, &s3));
        acc_u.sub_assign(&t3[0]);
        acc_v.sub_assign(&t3[1]);
    }

    (
        StaggeredVelocity {
            grid: vel.grid,
            u: acc_u,
            v: acc_v,
        },
        trace,
    )
}

/// The linear factors of the skew closure frozen at one state: the `k`, `q`
/// fields and the reparameterized `B` blocks. Applying them to arbitrary
/// two-channel fields exposes `K`, `K^T` and `Q^T Q` as plain linear
/// operators, which is how the dense operator probes and the term
/// diagnostics look at the architecture.
pub struct SkewOperator {
    pub k: [ScalarField; 2],
    pub q: [ScalarField; 2],
    b1: Vec<f64>,
    b2: Vec<f64>,
    b3: Vec<f64>,
}

pub fn skew_operator(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> SkewOperator {
    let (cnn_theta, b_raw) = split_skew_params(spec, theta);
    let mut outs = cnn::forward(spec, cnn_theta, &cnn_input(vel, ctx)).into_iter();
    let k = [outs.next().unwrap(), outs.next().unwrap()];
    let q = [outs.next().unwrap(), outs.next().unwrap()];
    SkewOperator {
        k,
        q,
        b1: reparam_block(b_raw[0]),
        b2: reparam_block(b_raw[1]),
        b3: reparam_block(b_raw[2]),
    }
}

impl SkewOperator {
    /// `K x = B1^T (k . B2 x)`.
    pub fn apply_k(&self, x: &[ScalarField]) -> Vec<ScalarField> {
        b_apply(&transpose_block(&self.b1), &mul_channels(&self.k, &b_apply(&self.b2, x)))
    }

    /// `K^T x = B2^T (k . B1 x)`.
    pub fn apply_k_t(&self, x: &[ScalarField]) -> Vec<ScalarField> {
        b_apply(&transpose_block(&self.b2), &mul_channels(&self.k, &b_apply(&self.b1, x)))
    }

    /// `Q^T Q x = B3^T (q^2 . B3 x)`.
    pub fn apply_qt_q(&self, x: &[ScalarField]) -> Vec<ScalarField> {
        let q_sq = [self.q[0].hadamard(&self.q[0]), self.q[1].hadamard(&self.q[1])];
        b_apply(&transpose_block(&self.b3), &mul_channels(&q_sq, &b_apply(&self.b3, x)))
    }
}

/// `||Q u||^2 = ||q . B3 u||^2`: the exact magnitude of the dissipative
/// term's energy drain. `<u, c_skew> = -skew_q_norm_sq` in exact arithmetic.
pub fn skew_q_norm_sq(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
) -> f64 {
    let (cnn_theta, b_raw) = split_skew_params(spec, theta);
    let outs = cnn::forward(spec, cnn_theta, &cnn_input(vel, ctx));
    let q = &outs[2..4];
    let b3 = reparam_block(b_raw[2]);
    let s3 = b_apply(&b3, &[vel.u.clone(), vel.v.clone()]);
    let qu = mul_channels(q, &s3);
    qu[0].norm_sq() + qu[1].norm_sq()
}

/// Adjoint of [`skew_closure`] with `terms` active, replaying the recorded
/// forward trace.
pub fn skew_closure_vjp(
    spec: &CnnSpec,
    theta: &[f64],
    vel: &StaggeredVelocity,
    ctx: &ClosureContext,
    terms: SkewTerms,
    trace: &cnn::CnnTrace,
    cot: &StaggeredVelocity,
    d_theta: &mut [f64],
) -> StaggeredVelocity {
    let (cnn_theta, b_raw) = split_skew_params(spec, theta);
    let outs = trace.inputs.last().expect("trace holds the network output");
    let k = &outs[0..2];
    let q = &outs[2..4];
    let x = [vel.u.clone(), vel.v.clone()];
    let w = [cot.u.clone(), cot.v.clone()];

    let b1 = reparam_block(b_raw[0]);
    let b2 = reparam_block(b_raw[1]);
    let b3 = reparam_block(b_raw[2]);

    let (nx, ny) = (vel.grid.nx, vel.grid.ny);
    let zero = || ScalarField::zeros(nx, ny);
    let mut x_bar = [zero(), zero()];
    let mut k_bar = [zero(), zero()];
    let mut q_bar = [zero(), zero()];
    let cnn_len = spec.param_count();
    let (d_cnn, d_b) = d_theta.split_at_mut(cnn_len);
    let (d_b1, rest) = d_b.split_at_mut(B_PARAMS);
    let (d_b2, d_b3) = rest.split_at_mut(B_PARAMS);

    let add_kernel_grad = |acc: &mut [f64], w_block: &[f64], input: &[ScalarField], cot: &[ScalarField]| {
        let vjp = conv2d_vjp(&B_DIMS, w_block, input, cot);
        let projected = reparam_block_vjp(&vjp.d_weights);
        for (dst, src) in acc.iter_mut().zip(&projected) {
            *dst += src;
        }
    };

    if terms != SkewTerms::QOnly {
        let s1 = b_apply(&b1, &x);
        let s2 = b_apply(&b2, &x);
        let b1w = b_apply(&b1, &w);
        let b2w = b_apply(&b2, &w);

        // operand path: x_bar += B2^T (k . B1 w) - B1^T (k . B2 w)
        let t = b_apply(&transpose_block(&b2), &mul_channels(k, &b1w));
        x_bar[0].add_assign(&t[0]);
        x_bar[1].add_assign(&t[1]);
        let t = b_apply(&transpose_block(&b1), &mul_channels(k, &b2w));
        x_bar[0].sub_assign(&t[0]);
        x_bar[1].sub_assign(&t[1]);

        // k path: k_bar += (B1 w).(B2 x) - (B2 w).(B1 x)
        for c in 0..2 {
            k_bar[c].add_assign(&b1w[c].hadamard(&s2[c]));
            k_bar[c].sub_assign(&b2w[c].hadamard(&s1[c]));
        }

        // kernel paths
        let k_b2w: Vec<_> = mul_channels(k, &b2w).iter().map(|f| f.scale(-1.0)).collect();
        add_kernel_grad(d_b1, &b1, &w, &mul_channels(k, &s2));
        add_kernel_grad(d_b1, &b1, &x, &k_b2w);
        let k_s1_neg: Vec<_> = mul_channels(k, &s1).iter().map(|f| f.scale(-1.0)).collect();
        add_kernel_grad(d_b2, &b2, &x, &mul_channels(k, &b1w));
        add_kernel_grad(d_b2, &b2, &w, &k_s1_neg);
    }

    if terms != SkewTerms::KOnly {
        let s3 = b_apply(&b3, &x);
        let b3w = b_apply(&b3, &w);
        let q_sq = [q[0].hadamard(&q[0]), q[1].hadamard(&q[1])];

        // operand path: x_bar -= B3^T (q^2 . B3 w)
        let t = b_apply(&transpose_block(&b3), &mul_channels(&q_sq, &b3w));
        x_bar[0].sub_assign(&t[0]);
        x_bar[1].sub_assign(&t[1]);

        // q path: q_bar -= 2 q . (B3 w) . (B3 x)
        for c in 0..2 {
            let mut g = q[c].hadamard(&b3w[c]);
            g = g.hadamard(&s3[c]);
            q_bar[c].add_scaled(-2.0, &g);
        }

        // kernel path (product rule over both B3 applications)
        let neg_q2_b3w: Vec<_> = mul_channels(&q_sq, &b3w)
            .iter()
            .map(|f| f.scale(-1.0))
            .collect();
        let neg_q2_s3: Vec<_> = mul_channels(&q_sq, &s3)
            .iter()
            .map(|f| f.scale(-1.0))
            .collect();
        add_kernel_grad(d_b3, &b3, &x, &neg_q2_b3w);
        add_kernel_grad(d_b3, &b3, &w, &neg_q2_s3);
    }

    // CNN path: backprop the (k, q) cotangents to the input channels.
    let cnn_cot = vec![
        k_bar[0].clone(),
        k_bar[1].clone(),
        q_bar[0].clone(),
        q_bar[1].clone(),
    ];
    let d_in = cnn::backward(spec, cnn_theta, trace, &cnn_cot, d_cnn);
    let mut vel_bar = cnn_input_vjp(vel, ctx, &d_in);
    vel_bar.u.add_assign(&x_bar[0]);
    vel_bar.v.add_assign(&x_bar[1]);
    vel_bar
}

/// Project a raw closure onto the eddy-viscosity direction `d = div(S)`
/// cell by cell (each cell owns its east u-face and north v-face), clip the
/// negative viscosities to zero, and return `nu_t . d`.
pub fn clip_to_eddy_viscosity(
    vel: &StaggeredVelocity,
    raw: &StaggeredVelocity,
) -> StaggeredVelocity {
    let d = strain_divergence(vel);
    let (nx, ny) = (vel.grid.nx, vel.grid.ny);
    let mut cu = ScalarField::zeros(nx, ny);
    let mut cv = ScalarField::zeros(nx, ny);
    for j in 0..ny {
        for i in 0..nx {
            let (du, dv) = (d.u.get(i, j), d.v.get(i, j));
            let denom = du * du + dv * dv;
            if denom > 0.0 {
                let nu_t = ((raw.u.get(i, j) * du + raw.v.get(i, j) * dv) / denom).max(0.0);
                cu.set(i, j, nu_t * du);
                cv.set(i, j, nu_t * dv);
            }
        }
    }
    StaggeredVelocity {
        grid: vel.grid,
        u: cu,
        v: cv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::{closure_energy, closure_momentum};
    use crate::grid::Grid;
    use crate::ops::{velocity_from_streamfunction, ForcingSpec};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn ctx() -> ClosureContext {
        ClosureContext::new(1e-3, ForcingSpec::None, 0.0)
    }

    fn divfree(g: Grid, seed: u64) -> StaggeredVelocity {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let psi = ScalarField::from_fn(g.nx, g.ny, |_, _| rng.random_range(-1.0..1.0));
        velocity_from_streamfunction(g, &psi)
    }

    #[test]
    fn zero_sum_reparam_examples() {
        let ones = vec![1.0; 25];
        let r = zero_sum_reparam(&ones);
        assert!(r.iter().all(|&x| x.abs() < 1e-16));

        let mut delta = vec![0.0; 25];
        delta[12] = 1.0;
        let r = zero_sum_reparam(&delta);
        assert!((r[12] - (1.0 - 1.0 / 25.0)).abs() < 1e-15);
        assert!((r[0] + 1.0 / 25.0).abs() < 1e-15);

        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let raw: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = zero_sum_reparam(&raw);
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(r.iter().sum::<f64>().abs() <= 1e-15 * norm.max(1.0));
        // idempotent
        let rr = zero_sum_reparam(&r);
        for (a, b) in r.iter().zip(&rr) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn transpose_block_is_the_adjoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let w: Vec<f64> = (0..B_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = Grid::square(8);
        let rand_pair = |s: u64| {
            let mut r = ChaCha12Rng::seed_from_u64(s);
            vec![
                ScalarField::from_fn(g.nx, g.ny, |_, _| r.random_range(-1.0..1.0)),
                ScalarField::from_fn(g.nx, g.ny, |_, _| r.random_range(-1.0..1.0)),
            ]
        };
        let x = rand_pair(3);
        let y = rand_pair(4);
        let bx = b_apply(&w, &x);
        let bty = b_apply(&transpose_block(&w), &y);
        let lhs = bx[0].dot(&y[0]) + bx[1].dot(&y[1]);
        let rhs = x[0].dot(&bty[0]) + x[1].dot(&bty[1]);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn zero_parameters_give_zero_closures() {
        let g = Grid::square(8);
        let vel = divfree(g, 5);
        let spec2 = CnnSpec::standard(2);
        let c = cnn_closure(&spec2, &vec![0.0; spec2.param_count()], &vel, &ctx());
        assert_eq!(c.max_abs(), 0.0);

        let spec3 = CnnSpec::standard(3);
        let c = div_closure(&spec3, &vec![0.0; spec3.param_count()], &vel, &ctx());
        assert_eq!(c.max_abs(), 0.0);

        let spec4 = CnnSpec::standard(4);
        let c = skew_closure(
            &spec4,
            &vec![0.0; skew_param_count(&spec4)],
            &vel,
            &ctx(),
            SkewTerms::Both,
        );
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn cnn_closure_is_translation_equivariant() {
        let g = Grid::square(16);
        let spec = CnnSpec::standard(2);
        let theta = spec.init_params(7);
        let vel = divfree(g, 6);
        let a = cnn_closure(&spec, &theta, &vel.shifted(2, 3), &ctx());
        let b = cnn_closure(&spec, &theta, &vel, &ctx()).shifted(2, 3);
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn div_closure_conserves_momentum() {
        let g = Grid::square(16);
        let spec = CnnSpec::standard(3);
        let theta = spec.init_params(8);
        let vel = divfree(g, 7);
        let c = div_closure(&spec, &theta, &vel, &ctx());
        let (sx, sy) = closure_momentum(&c);
        let scale = c.max_abs() * g.num_cells() as f64 * g.cell_volume;
        assert!(sx.abs() <= 1e-10 * scale.max(1e-300));
        assert!(sy.abs() <= 1e-10 * scale.max(1e-300));
        assert!(c.max_abs() > 0.0);
    }

    #[test]
    fn skew_closure_energy_identity_and_momentum() {
        let g = Grid::square(32);
        let spec = CnnSpec::standard(4);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for trial in 0..10 {
            // random parameters at full scale, not the small init
            let theta: Vec<f64> = (0..skew_param_count(&spec))
                .map(|_| rng.random_range(-0.3..0.3))
                .collect();
            let vel = divfree(g, 100 + trial);
            let c = skew_closure(&spec, &theta, &vel, &ctx(), SkewTerms::Both);
            let e = closure_energy(&vel, &c);
            let q_norm = skew_q_norm_sq(&spec, &theta, &vel, &ctx());
            assert!(e <= 0.0, "trial {trial}: energy {e}");
            assert!(
                (e + q_norm).abs() <= 1e-12 * q_norm.max(1e-300),
                "trial {trial}: e {e} vs -{q_norm}"
            );
            let (sx, sy) = closure_momentum(&c);
            let scale = c.max_abs() * g.num_cells() as f64 * g.cell_volume;
            assert!(sx.abs() <= 1e-10 * scale.max(1e-300));
            assert!(sy.abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn skew_k_term_is_energy_neutral() {
        let g = Grid::square(16);
        let spec = CnnSpec::standard(4);
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let theta: Vec<f64> = (0..skew_param_count(&spec))
            .map(|_| rng.random_range(-0.3..0.3))
            .collect();
        let vel = divfree(g, 11);
        let c = skew_closure(&spec, &theta, &vel, &ctx(), SkewTerms::KOnly);
        let e = closure_energy(&vel, &c);
        let scale = vel.norm_sq() * c.max_abs().max(1e-300);
        assert!(e.abs() <= 1e-12 * scale, "k-term energy {e}");
    }

    #[test]
    fn skew_terms_are_additive() {
        let g = Grid::square(16);
        let spec = CnnSpec::standard(4);
        let theta = skew_init_params(&spec, 12);
        let vel = divfree(g, 13);
        let full = skew_closure(&spec, &theta, &vel, &ctx(), SkewTerms::Both);
        let k_only = skew_closure(&spec, &theta, &vel, &ctx(), SkewTerms::KOnly);
        let q_only = skew_closure(&spec, &theta, &vel, &ctx(), SkewTerms::QOnly);
        let sum = k_only.add(&q_only);
        assert!(full.sub(&sum).max_abs() < 1e-14);
    }

    #[test]
    fn clipping_examples() {
        let g = Grid::square(16);
        let vel = divfree(g, 14);
        let d = strain_divergence(&vel);

        let c = clip_to_eddy_viscosity(&vel, &d.scale(2.0));
        assert!(c.sub(&d.scale(2.0)).max_abs() < 1e-12, "exact projection");

        let c = clip_to_eddy_viscosity(&vel, &d.scale(-1.0));
        assert_eq!(c.max_abs(), 0.0, "pure backscatter clips to zero");
    }

    #[test]
    fn clipped_closures_are_dissipative() {
        let g = Grid::square(16);
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        for trial in 0..50 {
            let vel = divfree(g, 200 + trial);
            let raw = StaggeredVelocity {
                grid: g,
                u: ScalarField::from_fn(g.nx, g.ny, |_, _| rng.random_range(-1.0..1.0)),
                v: ScalarField::from_fn(g.nx, g.ny, |_, _| rng.random_range(-1.0..1.0)),
            };
            let c = clip_to_eddy_viscosity(&vel, &raw);
            let e = closure_energy(&vel, &c);
            assert!(e <= 0.0, "trial {trial}: clipped energy {e}");
        }
    }
}
