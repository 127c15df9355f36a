use super::nets::{log_softmax2, RouterLearner};
use crate::nn::Tensor;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub episodes: usize,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub history_enabled: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            update_epochs: 4,
            minibatch_size: 256,
            policy_lr: 3e-4,
            value_lr: 1e-3,
            entropy_coef: 0.01,
            value_coef: 0.5,
            episodes: 1000,
            policy_hidden: vec![16, 16],
            value_hidden: vec![256, 256],
            history_enabled: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("ppo: {m}")));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail("gae_lambda must be in [0, 1]");
        }
        if !(self.clip > 0.0) {
            return fail("clip must be positive");
        }
        if self.update_epochs == 0 || self.minibatch_size == 0 {
            return fail("update_epochs and minibatch_size must be positive");
        }
        if !(self.policy_lr > 0.0 && self.value_lr > 0.0) {
            return fail("learning rates must be positive");
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef > 0.0) {
            return fail("entropy_coef must be >= 0 and value_coef > 0");
        }
        Ok(())
    }
}

/// One routing decision as seen by the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub decision: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    /// Last step of its episode (terminal or truncated).
    pub done: bool,
    /// Value of the state after a final step: 0 when terminal, the critic's estimate when truncated.
    pub bootstrap: f64,
}

/// On-policy storage, emptied by every update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub steps: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extend(&mut self, steps: impl IntoIterator<Item = Transition>) {
        self.steps.extend(steps);
    }

    pub fn clear(&mut self) {
        self.steps.clear();
    }
}

/// Generalized advantage estimates and returns (`advantages + values`), unnormalized.
pub fn gae_advantages(steps: &[Transition], gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if steps.is_empty() {
        return Err(Error::Empty("rollout buffer"));
    }
    if !steps.last().expect("non-empty").done {
        return Err(Error::InvalidInput("rollout buffer ends mid-episode".into()));
    }
    let n = steps.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let s = &steps[t];
        let (next_value, carry) = if s.done {
            (s.bootstrap, 0.0)
        } else {
            (steps[t + 1].value, running)
        };
        let delta = s.reward + gamma * next_value - s.value;
        running = delta + gamma * lambda * carry;
        adv[t] = running;
    }
    let returns = adv.iter().zip(steps).map(|(a, s)| a + s.value).collect();
    Ok((adv, returns))
}

/// Rescales to zero mean and unit standard deviation.
pub fn normalize(values: &mut [f64]) {
    let n = values.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Whether the unclipped branch carries the gradient.
fn unclipped(ratio: f64, advantage: f64, clip: f64) -> bool {
    !((advantage > 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateMetrics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Policy loss `-mean(surrogate) - c * mean(entropy)` and its gradient with respect to the logits.
pub(crate) fn policy_loss_and_grad(
    logits: &Tensor,
    decisions: &[usize],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
    entropy_coef: f64,
) -> (f64, Tensor, UpdateMetrics) {
    let n = decisions.len();
    let inv = 1.0 / n as f64;
    let mut grad = vec![0.0; n * 2];
    let mut m = UpdateMetrics::default();
    let mut loss = 0.0;
    for i in 0..n {
        let lp = log_softmax2(logits.row_slice(i));
        let p = [lp[0].exp(), lp[1].exp()];
        let a = decisions[i];
        let adv = advantages[i];
        let log_ratio = lp[a] - old_log_probs[i];
        let ratio = log_ratio.exp();
        let entropy = -(p[0] * lp[0] + p[1] * lp[1]);
        loss -= (clipped_surrogate(ratio, adv, clip) + entropy_coef * entropy) * inv;
        m.entropy += entropy * inv;
        m.approx_kl += ((ratio - 1.0) - log_ratio) * inv;
        if (ratio - 1.0).abs() > clip {
            m.clip_fraction += inv;
        }
        let g = &mut grad[i * 2..i * 2 + 2];
        for j in 0..2 {
            let onehot = if j == a { 1.0 } else { 0.0 };
            if unclipped(ratio, adv, clip) {
                g[j] -= adv * ratio * (onehot - p[j]) * inv;
            }
            // d(-c H)/dz_j = c p_j (log p_j + H)
            g[j] += entropy_coef * p[j] * (lp[j] + entropy) * inv;
        }
    }
    m.policy_loss = loss;
    (loss, Tensor::new(vec![n, 2], grad).expect("shape"), m)
}

/// Clipped-surrogate PPO over the buffer. Leaves the learner untouched on a non-finite loss.
pub fn ppo_update<R: Rng + ?Sized>(
    learner: &mut RouterLearner,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateMetrics> {
    let steps = &buffer.steps;
    let (mut adv, returns) = gae_advantages(steps, config.gamma, config.gae_lambda)?;
    normalize(&mut adv);
    let backup = learner.clone();
    let result = ppo_epochs(learner, steps, &adv, &returns, config, rng);
    match result {
        Ok(m) if learner.nets.policy.weights.is_finite() && learner.nets.value.weights.is_finite() => Ok(m),
        Ok(_) => {
            *learner = backup;
            Err(Error::Divergence("non-finite router weights after update".into()))
        }
        Err(e) => {
            *learner = backup;
            Err(e)
        }
    }
}

fn ppo_epochs<R: Rng + ?Sized>(
    learner: &mut RouterLearner,
    steps: &[Transition],
    adv: &[f64],
    returns: &[f64],
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateMetrics> {
    let mut order: Vec<usize> = (0..steps.len()).collect();
    let mut total = UpdateMetrics::default();
    let mut batches = 0usize;
    for _ in 0..config.update_epochs {
        order.shuffle(rng);
        for idx in order.chunks(config.minibatch_size) {
            let rows: Vec<&[f64]> = idx.iter().map(|&i| steps[i].state.as_slice()).collect();
            let x = Tensor::from_rows(&rows)?;
            let decisions: Vec<usize> = idx.iter().map(|&i| steps[i].decision).collect();
            let old: Vec<f64> = idx.iter().map(|&i| steps[i].log_prob).collect();
            let a: Vec<f64> = idx.iter().map(|&i| adv[i]).collect();

            let nets = &mut learner.nets;
            let (logits, cache) = nets.policy.forward(&x)?;
            let (loss, grad, mut m) =
                policy_loss_and_grad(&logits, &decisions, &old, &a, config.clip, config.entropy_coef);

            let (v, vcache) = nets.value.forward(&x)?;
            let inv = 1.0 / idx.len() as f64;
            let mut value_loss = 0.0;
            let mut vgrad = Vec::with_capacity(idx.len());
            for (k, &i) in idx.iter().enumerate() {
                let err = v.values[k] - returns[i];
                value_loss += err * err * inv;
                vgrad.push(2.0 * config.value_coef * err * inv);
            }
            m.value_loss = value_loss;
            if !loss.is_finite() || !value_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "PPO loss not finite (policy {loss}, value {value_loss}, entropy {})",
                    m.entropy
                )));
            }
            let (gp, _) = nets.policy.backward(&cache, &grad)?;
            let (gv, _) = nets.value.backward(&vcache, &Tensor::new(vec![idx.len(), 1], vgrad)?)?;
            learner.policy_opt.update(&mut learner.nets.policy.weights, &gp)?;
            learner.value_opt.update(&mut learner.nets.value.weights, &gv)?;

            total.policy_loss += m.policy_loss;
            total.value_loss += m.value_loss;
            total.entropy += m.entropy;
            total.approx_kl += m.approx_kl;
            total.clip_fraction += m.clip_fraction;
            batches += 1;
        }
    }
    let b = batches.max(1) as f64;
    Ok(UpdateMetrics {
        policy_loss: total.policy_loss / b,
        value_loss: total.value_loss / b,
        entropy: total.entropy / b,
        approx_kl: total.approx_kl / b,
        clip_fraction: total.clip_fraction / b,
    })
}
