use super::mlp::{ForwardCache, Gradients, MlpSpec, MlpWeights};
use super::tensor::Tensor;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A spec together with its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub weights: MlpWeights,
}

impl Mlp {
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        let weights = MlpWeights::init(&spec, seed)?;
        Ok(Mlp { spec, weights })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let weights = MlpWeights::zeros(&spec);
        Ok(Mlp { spec, weights })
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.weights.predict(&self.spec, input)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.weights.forward(&self.spec, input)
    }

    pub fn backward(&self, cache: &ForwardCache, upstream: &Tensor) -> Result<(Gradients, Tensor)> {
        self.weights.backward(&self.spec, cache, upstream)
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.spec.output_width()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.parameter_count()
    }

    pub fn fingerprint(&self) -> u64 {
        self.weights.fingerprint()
    }
}
