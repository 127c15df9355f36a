use super::tensor::{gemm, Tensor};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Tanh,
    /// Softmax over the output row (used with width 2).
    Softmax,
}

/// Layer widths from input to output plus one activation per hidden layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    /// Same activation on every hidden layer.
    pub fn uniform(widths: &[usize], hidden: Activation, output: OutputActivation) -> Self {
        MlpSpec {
            layer_widths: widths.to_vec(),
            activations: vec![hidden; widths.len().saturating_sub(2)],
            output_activation: output,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.activations.len() != self.layer_widths.len() - 2 {
            return Err(Error::Config(format!(
                "{} hidden layers but {} activations",
                self.layer_widths.len() - 2,
                self.activations.len()
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated spec")
    }

    pub fn layer_count(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Weight matrix `[out, in]` and bias `[out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub layers: Vec<Layer>,
}

/// Parameter gradients share the weight layout.
pub type Gradients = MlpWeights;

/// Activations recorded by [`MlpWeights::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    /// Pre-activation of every layer.
    pre: Vec<Vec<f64>>,
    /// Post-activation of every layer; the last entry is the network output.
    post: Vec<Vec<f64>>,
    batch: usize,
    fingerprint: u64,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl MlpWeights {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Layer {
                weight: Tensor::zeros(vec![w[1], w[0]]),
                bias: Tensor::zeros(vec![w[1]]),
            })
            .collect();
        MlpWeights { layers }
    }

    /// Seeded initialization: He-uniform ahead of relu, Xavier-uniform otherwise. Biases zero.
    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Self::zeros(spec);
        for (i, layer) in weights.layers.iter_mut().enumerate() {
            let (fan_in, fan_out) = (spec.layer_widths[i], spec.layer_widths[i + 1]);
            let bound = match spec.activations.get(i) {
                Some(Activation::Relu) => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            for w in layer.weight.values.iter_mut() {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(weights)
    }

    pub fn zeros_like(&self) -> Self {
        MlpWeights {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Tensor::zeros(l.weight.shape.clone()),
                    bias: Tensor::zeros(l.bias.shape.clone()),
                })
                .collect(),
        }
    }

    pub fn check(&self, spec: &MlpSpec) -> Result<()> {
        spec.validate()?;
        if self.layers.len() != spec.layer_count() {
            return Err(Error::shape(spec.layer_count(), self.layers.len()));
        }
        for (l, w) in self.layers.iter().zip(spec.layer_widths.windows(2)) {
            if l.weight.shape != [w[1], w[0]] || l.bias.shape != [w[1]] {
                return Err(Error::shape(
                    format!("[{}, {}]", w[1], w[0]),
                    format!("{:?}", l.weight.shape),
                ));
            }
            if l.weight.values.len() != w[0] * w[1] || l.bias.values.len() != w[1] {
                return Err(Error::shape(w[0] * w[1], l.weight.values.len()));
            }
        }
        Ok(())
    }

    /// Parameter tensors in declaration order: weight then bias for each layer.
    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    pub fn parameter_count(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(Tensor::is_finite)
    }

    /// Hash of the exact bit patterns of every parameter.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.params() {
            for v in &t.values {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3).rotate_left(5);
            }
            h ^= t.values.len() as u64;
        }
        h
    }

    /// Adds `scale * other` element-wise.
    pub fn add_scaled(&mut self, other: &MlpWeights, scale: f64) {
        for (a, b) in self.params_mut().zip(other.params()) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.params()
            .flat_map(|t| t.values.iter())
            .map(|v| v * v)
            .sum()
    }

    /// Batched forward pass keeping the activations needed by [`MlpWeights::backward`].
    /// `input` is `[batch, in]` or a single `[in]` row.
    pub fn forward(&self, spec: &MlpSpec, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.check(spec)?;
        let (batch, width) = input.matrix_dims()?;
        if width != spec.input_width() {
            return Err(Error::shape(spec.input_width(), width));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = if i == 0 { &input.values } else { &post[i - 1] };
            let z = affine(layer, x, batch);
            let a = activate(spec, i, &z, batch);
            pre.push(z);
            post.push(a);
        }
        let out_width = spec.output_width();
        let output = Tensor::new(vec![batch, out_width], post.last().cloned().unwrap_or_default())?;
        let cache = ForwardCache {
            input: input.clone(),
            pre,
            post,
            batch,
            fingerprint: self.fingerprint(),
        };
        Ok((output, cache))
    }

    /// Forward pass for one input vector without recording a cache.
    pub fn predict(&self, spec: &MlpSpec, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != spec.input_width() || self.layers.len() != spec.layer_count() {
            return Err(Error::shape(spec.input_width(), input.len()));
        }
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = affine(layer, &x, 1);
            x = activate(spec, i, &z, 1);
        }
        Ok(x)
    }

    /// Reverse-mode pass: gradients of `sum(upstream * output)` with respect to
    /// the parameters (summed over the batch) and to the input.
    pub fn backward(
        &self,
        spec: &MlpSpec,
        cache: &ForwardCache,
        upstream: &Tensor,
    ) -> Result<(Gradients, Tensor)> {
        if cache.fingerprint != self.fingerprint() || cache.pre.len() != self.layers.len() {
            return Err(Error::Usage("forward cache does not match these weights".into()));
        }
        let batch = cache.batch;
        let (rows, width) = upstream.matrix_dims()?;
        if rows != batch || width != spec.output_width() {
            return Err(Error::shape(
                format!("[{batch}, {}]", spec.output_width()),
                format!("{:?}", upstream.shape),
            ));
        }
        let mut grads = self.zeros_like();
        let last = self.layers.len() - 1;
        let mut delta = output_delta(spec, &cache.post[last], &upstream.values, batch);
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let out_w = layer.weight.shape[0];
            let in_w = layer.weight.shape[1];
            let x = if i == 0 { &cache.input.values } else { &cache.post[i - 1] };
            // dW = delta^T x
            gemm(out_w, batch, in_w, &delta, true, x, false, &mut grads.layers[i].weight.values, false);
            let db = &mut grads.layers[i].bias.values;
            for row in delta.chunks_exact(out_w) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            let mut dx = vec![0.0; batch * in_w];
            gemm(batch, out_w, in_w, &delta, false, &layer.weight.values, false, &mut dx, false);
            if i > 0 {
                let act = spec.activations[i - 1];
                for ((g, z), a) in dx.iter_mut().zip(&cache.pre[i - 1]).zip(&cache.post[i - 1]) {
                    *g *= match act {
                        Activation::Tanh => 1.0 - a * a,
                        Activation::Relu => {
                            if *z > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                }
            }
            delta = dx;
        }
        let input_grad = Tensor::new(cache.input.shape.clone(), delta)?;
        Ok((grads, input_grad))
    }
}

fn affine(layer: &Layer, x: &[f64], batch: usize) -> Vec<f64> {
    let out_w = layer.weight.shape[0];
    let in_w = layer.weight.shape[1];
    let mut z = Vec::with_capacity(batch * out_w);
    for _ in 0..batch {
        z.extend_from_slice(&layer.bias.values);
    }
    gemm(batch, in_w, out_w, x, false, &layer.weight.values, true, &mut z, true);
    z
}

fn activate(spec: &MlpSpec, layer: usize, z: &[f64], batch: usize) -> Vec<f64> {
    if let Some(act) = spec.activations.get(layer) {
        return match act {
            Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
        };
    }
    match spec.output_activation {
        OutputActivation::Identity => z.to_vec(),
        OutputActivation::Tanh => z.iter().map(|v| v.tanh()).collect(),
        OutputActivation::Softmax => {
            let width = z.len() / batch.max(1);
            let mut out = Vec::with_capacity(z.len());
            for row in z.chunks_exact(width) {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                out.extend(exps.iter().map(|e| e / sum));
            }
            out
        }
    }
}

fn output_delta(spec: &MlpSpec, y: &[f64], upstream: &[f64], batch: usize) -> Vec<f64> {
    match spec.output_activation {
        OutputActivation::Identity => upstream.to_vec(),
        OutputActivation::Tanh => upstream.iter().zip(y).map(|(g, a)| g * (1.0 - a * a)).collect(),
        OutputActivation::Softmax => {
            let width = y.len() / batch.max(1);
            let mut out = Vec::with_capacity(y.len());
            for (yr, gr) in y.chunks_exact(width).zip(upstream.chunks_exact(width)) {
                let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                out.extend(yr.iter().zip(gr).map(|(a, g)| a * (g - dot)));
            }
            out
        }
    }
}
