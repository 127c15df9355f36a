use super::config::{Density, Method, RunConfig};
use crate::costs::{LatencyConfig, PayloadMode};
use crate::env::{expert_action, new_episode, step, Mode, WorldConfig};
use crate::metrics::{aggregate, AggregateReport, EpisodeSummary};
use crate::policies::{
    train_cloud, train_local, CloudHead, ImitationDataset, LocalHead, Sample, SharedTrunk, TrainReport,
};
use crate::reward::RewardKind;
use crate::router::{
    derive_seed, run_episode, train_router, DecideMode, EpisodeSetup, Router, RouterNets, RouterTrainResult,
    RouterTrainSetup, Stack, TraceRecord,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const COLLECT_SALT: u64 = 0x0c01_1ec7;
const EVAL_SALT: u64 = 0xe7a1;

/// Provenance of one demonstration episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub index: usize,
    pub route: usize,
    pub seed: u64,
    pub pedestrian_count: usize,
    pub samples: usize,
}

/// Runs the expert for `episodes` episodes cycling through the training routes.
pub fn collect_dataset(
    config: &RunConfig,
    density: Density,
    episodes: usize,
) -> Result<(ImitationDataset, Vec<EpisodeHeader>)> {
    let routes = &config.env.train_routes;
    let mut dataset = ImitationDataset {
        density: density.name().into(),
        ..Default::default()
    };
    let mut headers = Vec::with_capacity(episodes);
    for index in 0..episodes {
        let route = routes[index % routes.len()];
        let world = config.env.params.world(route, density.pedestrians());
        let seed = derive_seed(config.seed ^ COLLECT_SALT, index as u64);
        let (mut state, mut obs) = new_episode(&world, seed, Mode::Eval)?;
        let before = dataset.samples.len();
        while !state.done {
            let action = expert_action(&state, &world);
            let out = step(&mut state, action, &world)?;
            dataset.samples.push(Sample { observation: obs, action });
            obs = out.observation;
        }
        dataset.seeds.push(seed);
        headers.push(EpisodeHeader {
            index,
            route,
            seed,
            pedestrian_count: world.pedestrian_count,
            samples: dataset.samples.len() - before,
        });
    }
    Ok((dataset, headers))
}

/// Trunk, both heads and their training reports.
#[derive(Debug, Clone)]
pub struct IlArtifacts {
    pub trunk: SharedTrunk,
    pub local: LocalHead,
    pub cloud: CloudHead,
    pub cloud_report: TrainReport,
    pub local_report: TrainReport,
}

impl IlArtifacts {
    pub fn stack(&self) -> Stack<'_> {
        Stack {
            trunk: &self.trunk,
            local: &self.local,
            cloud: &self.cloud,
        }
    }
}

/// Cloud policy with its trunk first, then the local head on the frozen trunk.
pub fn train_imitation(config: &RunConfig, dataset: &ImitationDataset) -> Result<IlArtifacts> {
    let p = &config.env.params;
    dataset.validate(p.d_m, p.m_v, p.ray_count + 3)?;
    let hyper = crate::policies::TrainHyper {
        seed: config.il.seed ^ config.seed,
        ..config.il
    };
    let preset = &config.models.preset;
    let (trunk, cloud, cloud_report) = train_cloud(dataset, preset, p.scale(), &hyper)?;
    let (local, local_report) = train_local(dataset, &trunk, preset, p.scale(), &hyper)?;
    Ok(IlArtifacts {
        trunk,
        local,
        cloud,
        cloud_report,
        local_report,
    })
}

/// What a router was trained for, recorded alongside its weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterVariant {
    pub history_len: Option<usize>,
    pub reward: RewardKind,
}

impl RouterVariant {
    pub fn for_method(method: Method, history_len: usize) -> Option<Self> {
        match method {
            Method::Unilcd => Some(RouterVariant { history_len: Some(history_len), reward: RewardKind::Multiplicative }),
            Method::UnilcdNoHistory => Some(RouterVariant { history_len: None, reward: RewardKind::Multiplicative }),
            Method::Additive => Some(RouterVariant { history_len: Some(history_len), reward: RewardKind::Additive }),
            _ => None,
        }
    }
}

/// Router training on the configured training routes at the RL density.
pub fn train_rl(config: &RunConfig, stack: Stack, variant: RouterVariant, seed: u64) -> Result<RouterTrainResult> {
    let p = &config.env.params;
    let density = config.rl.density.pedestrians();
    let train_worlds: Vec<WorldConfig> = config.env.train_routes.iter().map(|&r| p.world(r, density)).collect();
    let eval_worlds: Vec<WorldConfig> = config.eval.routes.iter().map(|&r| p.world(r, density)).collect();
    let mut reward = config.reward;
    reward.kind = variant.reward;
    let mut ppo = config.ppo.clone();
    ppo.history_enabled = variant.history_len.is_some();
    let setup = RouterTrainSetup {
        train_worlds: &train_worlds,
        eval_worlds: &eval_worlds,
        eval_seeds: &config.rl.eval_seeds,
        episode: EpisodeSetup {
            reward,
            energy: config.costs.energy.with_payload(PayloadMode::Embedding),
            latency: config.costs.latency,
            history: variant.history_len,
            mode: Mode::Train,
            record_trace: false,
        },
        metrics: config.metrics,
        ppo,
        history_len: variant.history_len.unwrap_or(config.models.history_len),
        eval_interval: config.rl.eval_interval,
        seed,
    };
    train_router(stack, &setup)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub method: Method,
    pub density: Density,
    pub payload: PayloadMode,
    pub latency: LatencyConfig,
    pub record_traces: bool,
}

impl EvalOptions {
    pub fn new(config: &RunConfig, method: Method, density: Density) -> Self {
        EvalOptions {
            method,
            density,
            payload: method.default_payload(),
            latency: config.costs.latency,
            record_traces: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub eval_seed: u64,
    pub route: usize,
    pub episode: usize,
    pub seed: u64,
    pub summary: EpisodeSummary,
    pub total_reward: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub episodes: Vec<EpisodeRecord>,
    /// Per episode, in the order of `episodes`; empty unless requested.
    pub traces: Vec<Vec<TraceRecord>>,
    pub report: AggregateReport,
}

/// A paired evaluation cell; every method sees the same cells for a given config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCell {
    pub eval_seed: u64,
    pub route: usize,
    pub episode: usize,
    pub seed: u64,
}

/// Cells over eval seeds × routes × episodes; independent of the training seed.
pub fn eval_cells(config: &RunConfig) -> Vec<EvalCell> {
    let mut cells = Vec::new();
    for &eval_seed in &config.eval.seeds {
        for &route in &config.eval.routes {
            for episode in 0..config.eval.episodes_per_route {
                let seed = derive_seed(eval_seed ^ EVAL_SALT, (route * 1_000_000 + episode) as u64);
                cells.push(EvalCell { eval_seed, route, episode, seed });
            }
        }
    }
    cells
}

/// Deterministic evaluation of one method over the configured routes and episodes.
pub fn evaluate(
    config: &RunConfig,
    stack: Stack,
    router: Option<&RouterNets>,
    options: &EvalOptions,
) -> Result<EvalOutcome> {
    let variant = RouterVariant::for_method(options.method, config.models.history_len);
    let routing = match (options.method, router) {
        (Method::LocalOnly, _) => Router::AlwaysLocal,
        (Method::CloudOnly, _) => Router::AlwaysCloud,
        (Method::Random(p), _) => Router::Random(p),
        (_, Some(nets)) => Router::Learned { nets, mode: DecideMode::Greedy },
        (m, None) => {
            return Err(Error::Usage(format!("method {} needs a router checkpoint", m.label())));
        }
    };
    let mut reward = config.reward;
    if let Some(v) = variant {
        reward.kind = v.reward;
    }
    let setup = EpisodeSetup {
        reward,
        energy: config.costs.energy.with_payload(options.payload),
        latency: options.latency,
        history: variant.map_or(Some(config.models.history_len), |v| v.history_len),
        mode: Mode::Eval,
        record_trace: options.record_traces,
    };
    let pedestrians = options.density.pedestrians();
    let results: Vec<(EpisodeRecord, Vec<TraceRecord>)> = eval_cells(config)
        .into_par_iter()
        .map(|c| {
            let world = config.env.params.world(c.route, pedestrians);
            let out = run_episode(&world, stack, routing, &setup, c.seed)?;
            Ok((
                EpisodeRecord {
                    eval_seed: c.eval_seed,
                    route: c.route,
                    episode: c.episode,
                    seed: c.seed,
                    summary: out.summary,
                    total_reward: out.total_reward,
                },
                out.trace,
            ))
        })
        .collect::<Result<_>>()?;
    let (episodes, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summaries: Vec<EpisodeSummary> = episodes.iter().map(|e| e.summary.clone()).collect();
    let mut report = aggregate(&summaries, &config.metrics)?;
    report.fingerprint = config.fingerprint();
    Ok(EvalOutcome {
        episodes,
        traces: if options.record_traces { traces } else { Vec::new() },
        report,
    })
}
