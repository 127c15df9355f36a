use crate::nn::{Activation, AdamW, Checkpoint, Mlp, MlpSpec, OutputActivation};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Sampled during training, argmax at evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecideMode {
    Sample,
    Greedy,
}

/// Decision 0 = local, 1 = cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub decision: usize,
    pub log_prob: f64,
    pub probs: [f64; 2],
}

/// Policy (logits over {local, cloud}) and value networks of the router.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterNets {
    pub policy: Mlp,
    pub value: Mlp,
}

pub(crate) fn log_softmax2(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

impl RouterNets {
    pub fn init(input_width: usize, policy_hidden: &[usize], value_hidden: &[usize], seed: u64) -> Result<Self> {
        let widths = |hidden: &[usize], out: usize| {
            let mut w = vec![input_width];
            w.extend_from_slice(hidden);
            w.push(out);
            w
        };
        let policy_spec = MlpSpec::uniform(&widths(policy_hidden, 2), Activation::Tanh, OutputActivation::Identity);
        let value_spec = MlpSpec::uniform(&widths(value_hidden, 1), Activation::Tanh, OutputActivation::Identity);
        let mut policy = Mlp::init(policy_spec, seed.wrapping_mul(2) + 11)?;
        // near-uniform initial routing
        for v in policy.weights.layers.last_mut().expect("layers").weight.values.iter_mut() {
            *v *= 0.01;
        }
        Ok(RouterNets {
            policy,
            value: Mlp::init(value_spec, seed.wrapping_mul(2) + 12)?,
        })
    }

    pub fn input_width(&self) -> usize {
        self.policy.input_width()
    }

    fn check_width(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.input_width() {
            return Err(Error::shape(self.input_width(), state.len()));
        }
        Ok(())
    }

    /// Routing probabilities `[p_local, p_cloud]`.
    pub fn probs(&self, state: &[f64]) -> Result<[f64; 2]> {
        self.check_width(state)?;
        let lp = log_softmax2(&self.policy.predict(state)?);
        Ok([lp[0].exp(), lp[1].exp()])
    }

    pub fn decide<R: Rng + ?Sized>(&self, state: &[f64], mode: DecideMode, rng: &mut R) -> Result<Decision> {
        self.check_width(state)?;
        let lp = log_softmax2(&self.policy.predict(state)?);
        let probs = [lp[0].exp(), lp[1].exp()];
        let decision = match mode {
            DecideMode::Greedy => usize::from(probs[1] > probs[0]),
            DecideMode::Sample => usize::from(rng.random::<f64>() >= probs[0]),
        };
        Ok(Decision {
            decision,
            log_prob: lp[decision],
            probs,
        })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        if state.len() != self.value.input_width() {
            return Err(Error::shape(self.value.input_width(), state.len()));
        }
        Ok(self.value.predict(state)?[0])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new("router")
            .with_network("policy", &self.policy)
            .with_network("value", &self.value)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("router")?;
        let nets = RouterNets {
            policy: ck.network("policy")?.clone(),
            value: ck.network("value")?.clone(),
        };
        if nets.policy.output_width() != 2 || nets.value.output_width() != 1 {
            return Err(Error::Schema("router networks must output 2 logits and 1 value".into()));
        }
        if nets.policy.input_width() != nets.value.input_width() {
            return Err(Error::shape(nets.policy.input_width(), nets.value.input_width()));
        }
        Ok(nets)
    }
}

/// Router networks together with their optimizers.
#[derive(Debug, Clone)]
pub struct RouterLearner {
    pub nets: RouterNets,
    pub policy_opt: AdamW,
    pub value_opt: AdamW,
}

impl RouterLearner {
    pub fn new(nets: RouterNets, policy_lr: f64, value_lr: f64) -> Self {
        RouterLearner {
            policy_opt: AdamW::new(&nets.policy.weights, policy_lr, 0.0),
            value_opt: AdamW::new(&nets.value.weights, value_lr, 0.0),
            nets,
        }
    }
}
