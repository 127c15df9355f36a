use super::dataset::{ImitationDataset, Sample};
use super::heads::{ActionScale, CloudHead, LocalHead, PolicyPreset, SharedTrunk};
use crate::nn::{l1_loss, AdamW, Mlp, Tensor};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainHyper {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            epochs: 200,
            lr: 1e-4,
            weight_decay: 1e-4,
            batch_size: 64,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Validation loss of the freshly initialized network.
    pub initial_val_loss: f64,
    pub best_epoch: usize,
    pub parameter_count: usize,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch]
    }
}

/// Seeded train/validation index split.
fn split(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5711));
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(usize::from(n > 1), n.saturating_sub(1));
    let val = idx.split_off(n - n_val);
    (idx, val)
}

fn gather<F: Fn(&Sample) -> Vec<f64>>(samples: &[Sample], idx: &[usize], f: F) -> Tensor {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| f(&samples[i])).collect();
    Tensor::from_rows(&rows).expect("uniform rows")
}

fn targets(samples: &[Sample], idx: &[usize], scale: &ActionScale) -> Tensor {
    gather(samples, idx, |s| scale.encode(&s.action).to_vec())
}

fn concat_cols(a: &Tensor, b: &Tensor) -> Tensor {
    let (rows, wa) = a.matrix_dims().expect("matrix");
    let (_, wb) = b.matrix_dims().expect("matrix");
    let mut values = Vec::with_capacity(rows * (wa + wb));
    for r in 0..rows {
        values.extend_from_slice(a.row_slice(r));
        values.extend_from_slice(b.row_slice(r));
    }
    Tensor::new(vec![rows, wa + wb], values).expect("consistent")
}

fn leading_cols(t: &Tensor, width: usize) -> Tensor {
    let (rows, _) = t.matrix_dims().expect("matrix");
    let mut values = Vec::with_capacity(rows * width);
    for r in 0..rows {
        values.extend_from_slice(&t.row_slice(r)[..width]);
    }
    Tensor::new(vec![rows, width], values).expect("consistent")
}

fn check_finite(loss: f64, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence(format!("{what} loss became {loss}")))
    }
}

struct CloudStack<'a> {
    trunk: &'a Mlp,
    body: &'a Mlp,
    merge: &'a Mlp,
}

impl CloudStack<'_> {
    fn predict(&self, obs: &Tensor, goal: &Tensor) -> Result<Tensor> {
        let (e, _) = self.trunk.forward(obs)?;
        let (h, _) = self.body.forward(&e)?;
        Ok(self.merge.forward(&concat_cols(&h, goal))?.0)
    }
}

fn cloud_val_loss(stack: &CloudStack, samples: &[Sample], idx: &[usize], scale: &ActionScale) -> Result<f64> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let obs = gather(samples, idx, |s| s.observation.features());
    let goal = gather(samples, idx, |s| s.observation.goal.to_vec());
    let y = stack.predict(&obs, &goal)?;
    Ok(l1_loss(&y, &targets(samples, idx, scale))?.0)
}

/// Trains trunk and cloud head jointly on the L1 imitation objective.
/// Returns the best-validation weights; the returned trunk is frozen.
pub fn train_cloud(
    dataset: &ImitationDataset,
    preset: &PolicyPreset,
    scale: ActionScale,
    hyper: &TrainHyper,
) -> Result<(SharedTrunk, CloudHead, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::Empty("imitation dataset"));
    }
    let start = Instant::now();
    let samples = &dataset.samples;
    let obs_width = samples[0].observation.features().len();
    let (body_spec, merge_spec) = preset.cloud_specs();
    let mut trunk = Mlp::init(preset.trunk_spec(obs_width), hyper.seed.wrapping_mul(3) + 1)?;
    let mut body = Mlp::init(body_spec, hyper.seed.wrapping_mul(3) + 2)?;
    let mut merge = Mlp::init(merge_spec, hyper.seed.wrapping_mul(3) + 3)?;
    let mut opt_t = AdamW::new(&trunk.weights, hyper.lr, hyper.weight_decay);
    let mut opt_b = AdamW::new(&body.weights, hyper.lr, hyper.weight_decay);
    let mut opt_m = AdamW::new(&merge.weights, hyper.lr, hyper.weight_decay);

    let (mut train_idx, val_idx) = split(samples.len(), hyper.val_fraction, hyper.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let initial_val_loss = cloud_val_loss(&CloudStack { trunk: &trunk, body: &body, merge: &merge }, samples, &val_idx, &scale)?;

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(hyper.epochs),
        val_loss: Vec::with_capacity(hyper.epochs),
        initial_val_loss,
        best_epoch: 0,
        parameter_count: body.parameter_count() + merge.parameter_count(),
        wall_seconds: 0.0,
    };
    let mut best = (trunk.clone(), body.clone(), merge.clone());
    let body_width = body.output_width();

    for epoch in 0..hyper.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(hyper.batch_size.max(1)) {
            let obs = gather(samples, batch, |s| s.observation.features());
            let goal = gather(samples, batch, |s| s.observation.goal.to_vec());
            let (e, trunk_cache) = trunk.forward(&obs)?;
            let (h, body_cache) = body.forward(&e)?;
            let (y, merge_cache) = merge.forward(&concat_cols(&h, &goal))?;
            let (loss, grad) = l1_loss(&y, &targets(samples, batch, &scale))?;
            check_finite(loss, "cloud imitation")?;
            total += loss * batch.len() as f64;

            let (g_merge, d_merge_in) = merge.backward(&merge_cache, &grad)?;
            let (g_body, d_e) = body.backward(&body_cache, &leading_cols(&d_merge_in, body_width))?;
            let (g_trunk, _) = trunk.backward(&trunk_cache, &d_e)?;
            opt_m.update(&mut merge.weights, &g_merge)?;
            opt_b.update(&mut body.weights, &g_body)?;
            opt_t.update(&mut trunk.weights, &g_trunk)?;
        }
        report.train_loss.push(total / train_idx.len().max(1) as f64);
        let val = cloud_val_loss(&CloudStack { trunk: &trunk, body: &body, merge: &merge }, samples, &val_idx, &scale)?;
        report.val_loss.push(val);
        if epoch == 0 || val < report.val_loss[report.best_epoch] {
            report.best_epoch = epoch;
            best = (trunk.clone(), body.clone(), merge.clone());
        }
    }

    let (trunk_net, body, merge) = if hyper.epochs == 0 { (trunk, body, merge) } else { best };
    let trunk = SharedTrunk { net: trunk_net, frozen: true };
    let cloud = CloudHead {
        body,
        merge,
        scale,
        trunk_hash: trunk.hash(),
    };
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((trunk, cloud, report))
}

fn embed_all(trunk: &SharedTrunk, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..samples.len()).collect();
    let obs = gather(samples, &idx, |s| s.observation.features());
    let (e, _) = trunk.net.forward(&obs)?;
    Ok((0..samples.len())
        .map(|r| {
            let mut x = e.row_slice(r).to_vec();
            x.extend_from_slice(&samples[r].observation.goal);
            x
        })
        .collect())
}

fn rows_at(rows: &[Vec<f64>], idx: &[usize]) -> Tensor {
    let picked: Vec<&[f64]> = idx.iter().map(|&i| rows[i].as_slice()).collect();
    Tensor::from_rows(&picked).expect("uniform rows")
}

/// Trains only the local head on embeddings from a frozen trunk.
pub fn train_local(
    dataset: &ImitationDataset,
    trunk: &SharedTrunk,
    preset: &PolicyPreset,
    scale: ActionScale,
    hyper: &TrainHyper,
) -> Result<(LocalHead, TrainReport)> {
    if !trunk.frozen {
        return Err(Error::Usage("local head needs a trained, frozen trunk".into()));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("imitation dataset"));
    }
    if preset.embedding_dim != trunk.embedding_dim() {
        return Err(Error::shape(trunk.embedding_dim(), preset.embedding_dim));
    }
    let start = Instant::now();
    let samples = &dataset.samples;
    let inputs = embed_all(trunk, samples)?;
    let mut head = Mlp::init(preset.local_spec(), hyper.seed.wrapping_mul(3) + 4)?;
    let mut opt = AdamW::new(&head.weights, hyper.lr, hyper.weight_decay);
    let (mut train_idx, val_idx) = split(samples.len(), hyper.val_fraction, hyper.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));

    let val_loss = |head: &Mlp| -> Result<f64> {
        if val_idx.is_empty() {
            return Ok(f64::NAN);
        }
        let (y, _) = head.forward(&rows_at(&inputs, &val_idx))?;
        Ok(l1_loss(&y, &targets(samples, &val_idx, &scale))?.0)
    };

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(hyper.epochs),
        val_loss: Vec::with_capacity(hyper.epochs),
        initial_val_loss: val_loss(&head)?,
        best_epoch: 0,
        parameter_count: head.parameter_count(),
        wall_seconds: 0.0,
    };
    let mut best = head.clone();
    for epoch in 0..hyper.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(hyper.batch_size.max(1)) {
            let (y, cache) = head.forward(&rows_at(&inputs, batch))?;
            let (loss, grad) = l1_loss(&y, &targets(samples, batch, &scale))?;
            check_finite(loss, "local imitation")?;
            total += loss * batch.len() as f64;
            let (g, _) = head.backward(&cache, &grad)?;
            opt.update(&mut head.weights, &g)?;
        }
        report.train_loss.push(total / train_idx.len().max(1) as f64);
        let val = val_loss(&head)?;
        report.val_loss.push(val);
        if epoch == 0 || val < report.val_loss[report.best_epoch] {
            report.best_epoch = epoch;
            best = head.clone();
        }
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    let net = if hyper.epochs == 0 { head } else { best };
    Ok((
        LocalHead {
            net,
            scale,
            trunk_hash: trunk.hash(),
        },
        report,
    ))
}

/// Mean L1 error (normalized action units) of the local head over `samples`.
pub fn local_l1(trunk: &SharedTrunk, head: &LocalHead, samples: &[Sample]) -> Result<f64> {
    let idx: Vec<usize> = (0..samples.len()).collect();
    let inputs = embed_all(trunk, samples)?;
    let (y, _) = head.net.forward(&rows_at(&inputs, &idx))?;
    Ok(l1_loss(&y, &targets(samples, &idx, &head.scale))?.0)
}

/// Mean L1 error (normalized action units) of the cloud head over `samples`.
pub fn cloud_l1(trunk: &SharedTrunk, head: &CloudHead, samples: &[Sample]) -> Result<f64> {
    let idx: Vec<usize> = (0..samples.len()).collect();
    let stack = CloudStack { trunk: &trunk.net, body: &head.body, merge: &head.merge };
    cloud_val_loss(&stack, samples, &idx, &head.scale)
}
