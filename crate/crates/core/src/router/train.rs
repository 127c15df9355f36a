use super::nets::{DecideMode, RouterLearner, RouterNets};
use super::ppo::{ppo_update, PpoConfig, RolloutBuffer, UpdateMetrics};
use super::rollout::{run_episode, EpisodeSetup, Router, Stack};
use crate::env::{Mode, WorldConfig};
use crate::metrics::MetricConfig;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Episodes between evaluation checkpoints.
pub const EVAL_INTERVAL: usize = 50;

/// Decorrelated per-index seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Training episodes completed.
    pub checkpoint_index: usize,
    pub mean_reward: f64,
    pub ens_mean: f64,
    pub ens_std: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainCurve {
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct RouterTrainSetup<'a> {
    pub train_worlds: &'a [WorldConfig],
    pub eval_worlds: &'a [WorldConfig],
    /// Fixed evaluation seeds; seed `i` runs on `eval_worlds[i % len]`.
    pub eval_seeds: &'a [u64],
    pub episode: EpisodeSetup,
    pub metrics: MetricConfig,
    pub ppo: PpoConfig,
    pub history_len: usize,
    pub eval_interval: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RouterTrainResult {
    pub nets: RouterNets,
    /// Weights at the checkpoint with the highest mean ENS.
    pub best: RouterNets,
    pub curve: TrainCurve,
    pub last_update: UpdateMetrics,
    pub episodes_run: usize,
    /// Set when training stopped on a non-finite loss; `nets` are then the last good weights.
    pub diverged: Option<String>,
}

/// Greedy evaluation on the fixed seeds: (mean episode reward, ENS mean, ENS std).
pub fn evaluate_router(
    nets: &RouterNets,
    stack: Stack,
    worlds: &[WorldConfig],
    seeds: &[u64],
    episode: &EpisodeSetup,
    metrics: &MetricConfig,
) -> Result<CurvePoint> {
    if worlds.is_empty() || seeds.is_empty() {
        return Err(Error::Empty("evaluation worlds or seeds"));
    }
    let setup = EpisodeSetup {
        mode: Mode::Eval,
        record_trace: false,
        ..episode.clone()
    };
    let router = Router::Learned { nets, mode: DecideMode::Greedy };
    let results: Vec<(f64, f64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let out = run_episode(&worlds[i % worlds.len()], stack, router, &setup, seed)?;
            let s = &out.summary;
            Ok((out.total_reward, s.energy_penalty(metrics)? * s.navigation_score(metrics)))
        })
        .collect::<Result<_>>()?;
    let n = results.len() as f64;
    let mean_reward = results.iter().map(|r| r.0).sum::<f64>() / n;
    let ens_mean = results.iter().map(|r| r.1).sum::<f64>() / n;
    let ens_var = results.iter().map(|r| (r.1 - ens_mean).powi(2)).sum::<f64>() / n;
    Ok(CurvePoint {
        checkpoint_index: 0,
        mean_reward,
        ens_mean,
        ens_std: ens_var.sqrt(),
    })
}

/// One episode per PPO update, greedy evaluation every `eval_interval` episodes.
pub fn train_router(stack: Stack, setup: &RouterTrainSetup) -> Result<RouterTrainResult> {
    setup.ppo.validate()?;
    if setup.train_worlds.is_empty() {
        return Err(Error::Empty("training worlds"));
    }
    let episode = EpisodeSetup {
        history: setup.ppo.history_enabled.then_some(setup.history_len),
        mode: Mode::Train,
        record_trace: false,
        ..setup.episode.clone()
    };
    let width = episode.router_input_width(stack.trunk.embedding_dim());
    let nets = RouterNets::init(width, &setup.ppo.policy_hidden, &setup.ppo.value_hidden, setup.seed)?;
    let mut learner = RouterLearner::new(nets, setup.ppo.policy_lr, setup.ppo.value_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    rng.set_stream(3);

    let mut curve = TrainCurve::default();
    let mut best: Option<(f64, RouterNets)> = None;
    let mut last_update = UpdateMetrics::default();
    let mut buffer = RolloutBuffer::default();
    let mut diverged = None;
    let mut episodes_run = 0;
    let interval = setup.eval_interval.max(1);

    for i in 0..setup.ppo.episodes {
        let world = &setup.train_worlds[i % setup.train_worlds.len()];
        let router = Router::Learned { nets: &learner.nets, mode: DecideMode::Sample };
        let out = run_episode(world, stack, router, &episode, derive_seed(setup.seed, i as u64))?;
        buffer.extend(out.transitions);
        match ppo_update(&mut learner, &buffer, &setup.ppo, &mut rng) {
            Ok(m) => last_update = m,
            Err(Error::Divergence(msg)) => {
                diverged = Some(format!("episode {i}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
        buffer.clear();
        episodes_run = i + 1;

        if episodes_run % interval == 0 {
            let mut point =
                evaluate_router(&learner.nets, stack, setup.eval_worlds, setup.eval_seeds, &episode, &setup.metrics)?;
            point.checkpoint_index = episodes_run;
            curve.points.push(point);
            if best.as_ref().is_none_or(|(b, _)| point.ens_mean > *b) {
                best = Some((point.ens_mean, learner.nets.clone()));
            }
        }
    }
    let nets = learner.nets;
    Ok(RouterTrainResult {
        best: best.map(|(_, n)| n).unwrap_or_else(|| nets.clone()),
        nets,
        curve,
        last_update,
        episodes_run,
        diverged,
    })
}
