//! The closure CNN: chained periodic convolutions with ReLU activations in
//! between and an identity activation on the final layer.

use crate::field::ScalarField;
use crate::nn::conv::{conv2d_periodic, conv2d_vjp, ConvDims};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn tag(&self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    pub radius: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dims(&self) -> ConvDims {
        ConvDims {
            in_ch: self.in_ch,
            out_ch: self.out_ch,
            radius: self.radius,
        }
    }

    /// Weights plus biases of this layer.
    pub fn param_count(&self) -> usize {
        self.dims().weight_count() + self.out_ch
    }
}

/// Layer list of the closure network. Channel counts must chain and the
/// final layer must use the identity activation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnnSpec {
    pub layers: Vec<LayerSpec>,
}

impl CnnSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(pair[0].out_ch, pair[1].in_ch, "channel counts must chain");
        }
        assert_eq!(
            layers.last().unwrap().activation,
            Activation::Identity,
            "final layer must be linear"
        );
        CnnSpec { layers }
    }

    /// The architecture used by all closure models: 4 input channels, four
    /// hidden layers of 32 channels with ReLU, radius 2 everywhere, and a
    /// linear output layer with `out_ch` channels.
    pub fn standard(out_ch: usize) -> Self {
        let mut layers = Vec::new();
        let widths = [4usize, 32, 32, 32, 32];
        for w in widths.windows(2) {
            layers.push(LayerSpec {
                in_ch: w[0],
                out_ch: w[1],
                radius: 2,
                activation: Activation::Relu,
            });
        }
        layers.push(LayerSpec {
            in_ch: 32,
            out_ch,
            radius: 2,
            activation: Activation::Identity,
        });
        CnnSpec::new(layers)
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.layers.last().unwrap().out_ch
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Parameter slice boundaries per layer, in declaration order
    /// (weights, then biases, per layer).
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for l in &self.layers {
            acc += l.param_count();
            offsets.push(acc);
        }
        offsets
    }

    /// Uniform initialization in `+-sqrt(1 / (fan_in * taps))`, zero biases.
    /// The final (linear) layer is shrunk by `1e-2` so a freshly initialized
    /// closure stays small compared to the resolved tendency; the unrolled
    /// training start is then a perturbation of the no-closure solver.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(self.param_count());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let dims = layer.dims();
            let scale = (1.0 / (layer.in_ch as f64 * dims.kernel_len() as f64)).sqrt()
                * if li == last { 1e-2 } else { 1.0 };
            for _ in 0..dims.weight_count() {
                params.push(rng.random_range(-scale..scale));
            }
            for _ in 0..layer.out_ch {
                params.push(0.0);
            }
        }
        params
    }
}

/// Saved activations of one forward pass: `inputs[n]` is the input of layer
/// `n`, `inputs[len]` the network output (also the ReLU masks, since a ReLU
/// output is positive exactly where its input was).
pub struct CnnTrace {
    pub inputs: Vec<Vec<ScalarField>>,
}

fn apply_activation(fields: &mut [ScalarField], act: Activation) {
    if act == Activation::Relu {
        for f in fields {
            for x in f.as_mut_slice() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
    }
}

fn layer_params<'a>(spec: &CnnSpec, params: &'a [f64], li: usize) -> (&'a [f64], &'a [f64]) {
    let offsets = spec.layer_offsets();
    let layer = &spec.layers[li];
    let start = offsets[li];
    let w_len = layer.dims().weight_count();
    (
        &params[start..start + w_len],
        &params[start + w_len..start + w_len + layer.out_ch],
    )
}

/// Forward evaluation.
pub fn forward(spec: &CnnSpec, params: &[f64], input: &[ScalarField]) -> Vec<ScalarField> {
    assert_eq!(params.len(), spec.param_count(), "parameter count");
    assert_eq!(input.len(), spec.in_channels(), "input channel count");
    let mut z = input.to_vec();
    for (li, layer) in spec.layers.iter().enumerate() {
        let (w, b) = layer_params(spec, params, li);
        let mut out = conv2d_periodic(&layer.dims(), w, b, &z);
        apply_activation(&mut out, layer.activation);
        z = out;
    }
    z
}

/// Forward evaluation that records per-layer inputs for the backward pass.
pub fn forward_traced(
    spec: &CnnSpec,
    params: &[f64],
    input: &[ScalarField],
) -> (Vec<ScalarField>, CnnTrace) {
    assert_eq!(params.len(), spec.param_count());
    assert_eq!(input.len(), spec.in_channels());
    let mut inputs = Vec::with_capacity(spec.layers.len() + 1);
    let mut z = input.to_vec();
    for (li, layer) in spec.layers.iter().enumerate() {
        let (w, b) = layer_params(spec, params, li);
        let mut out = conv2d_periodic(&layer.dims(), w, b, &z);
        apply_activation(&mut out, layer.activation);
        inputs.push(std::mem::replace(&mut z, out));
    }
    let output = z.clone();
    inputs.push(z);
    (output, CnnTrace { inputs })
}

/// Reverse pass. Accumulates parameter gradients into `d_params` (which must
/// have the full parameter length) and returns the cotangent on the network
/// input.
pub fn backward(
    spec: &CnnSpec,
    params: &[f64],
    trace: &CnnTrace,
    cot: &[ScalarField],
    d_params: &mut [f64],
) -> Vec<ScalarField> {
    assert_eq!(d_params.len(), spec.param_count());
    assert_eq!(cot.len(), spec.out_channels());
    let offsets = spec.layer_offsets();
    let mut grad = cot.to_vec();
    for li in (0..spec.layers.len()).rev() {
        let layer = &spec.layers[li];
        if layer.activation == Activation::Relu {
            // gate by the recorded post-activation
            let post = &trace.inputs[li + 1];
            for (g, p) in grad.iter_mut().zip(post) {
                for (gx, px) in g.as_mut_slice().iter_mut().zip(p.as_slice()) {
                    if *px <= 0.0 {
                        *gx = 0.0;
                    }
                }
            }
        }
        let (w, _) = layer_params(spec, params, li);
        let vjp = conv2d_vjp(&layer.dims(), w, &trace.inputs[li], &grad);
        let start = offsets[li];
        let w_len = layer.dims().weight_count();
        for (dst, src) in d_params[start..start + w_len].iter_mut().zip(&vjp.d_weights) {
            *dst += src;
        }
        for (dst, src) in d_params[start + w_len..start + w_len + layer.out_ch]
            .iter_mut()
            .zip(&vjp.d_bias)
        {
            *dst += src;
        }
        grad = vjp.d_input;
    }
    grad
}
