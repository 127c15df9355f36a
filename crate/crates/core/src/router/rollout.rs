use super::history::{router_features, History};
use super::nets::{DecideMode, RouterNets};
use super::ppo::Transition;
use crate::costs::{
    decision_time, latency_to_ticks, sample_latency, step_energy, EnergyConfig, EnergyLedger, LatencyConfig, Source,
};
use crate::env::{new_episode, route_progress, step, Action, Mode, Observation, StepEvents, Vec2, WorldConfig};
use crate::metrics::EpisodeSummary;
use crate::policies::{CloudHead, LocalHead, SharedTrunk};
use crate::reward::{compose, RewardBreakdown, RewardConfig, RewardInputs};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// RNG stream used for routing draws and latency samples, separate from the world's.
const ROUTING_STREAM: u64 = 7;

/// Trained navigation components sharing one trunk.
#[derive(Debug, Clone, Copy)]
pub struct Stack<'a> {
    pub trunk: &'a SharedTrunk,
    pub local: &'a LocalHead,
    pub cloud: &'a CloudHead,
}

impl Stack<'_> {
    pub fn check(&self, observation_width: usize) -> Result<()> {
        let hash = self.trunk.hash();
        if self.local.trunk_hash != hash || self.cloud.trunk_hash != hash {
            return Err(Error::InvalidInput("heads were trained against a different trunk".into()));
        }
        if self.trunk.net.input_width() != observation_width {
            return Err(Error::shape(observation_width, self.trunk.net.input_width()));
        }
        let e = self.trunk.embedding_dim();
        if self.local.net.input_width() != e + 2 || self.cloud.body.input_width() != e {
            return Err(Error::shape(e + 2, self.local.net.input_width()));
        }
        Ok(())
    }
}

/// Who decides between local and cloud at each step.
#[derive(Debug, Clone, Copy)]
pub enum Router<'a> {
    Learned { nets: &'a RouterNets, mode: DecideMode },
    AlwaysLocal,
    AlwaysCloud,
    /// Cloud with probability `p`.
    Random(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSetup {
    pub reward: RewardConfig,
    pub energy: EnergyConfig,
    pub latency: LatencyConfig,
    /// History length fed to the router; `None` feeds the embedding alone.
    pub history: Option<usize>,
    pub mode: Mode,
    pub record_trace: bool,
}

impl EpisodeSetup {
    pub fn router_input_width(&self, embedding_dim: usize) -> usize {
        embedding_dim + 3 * self.history.unwrap_or(0)
    }

    /// Energy the reward's energy term is normalized by.
    pub fn m_e(&self) -> f64 {
        self.reward.m_e.unwrap_or_else(|| self.energy.max_step_energy())
    }
}

/// One simulated tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub decision: u64,
    pub source: Source,
    /// Held previous action while waiting on the cloud.
    pub hold: bool,
    pub position: Vec2,
    pub heading: f64,
    pub action: Action,
    /// Present on the last tick of each decision.
    pub reward: Option<RewardBreakdown>,
    pub d_geo: f64,
    /// Charged on the first tick of each decision, J.
    pub energy: f64,
    /// Charged on the first tick of each decision, s.
    pub decision_seconds: f64,
    pub collisions: u32,
    /// Distance moved this tick, m.
    pub moved: f64,
    /// Route completion after this tick, percent.
    pub rc: f64,
    pub events: StepEvents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub summary: EpisodeSummary,
    pub ledger: EnergyLedger,
    /// Filled for learned routers only.
    pub transitions: Vec<Transition>,
    pub trace: Vec<TraceRecord>,
    pub total_reward: f64,
}

fn features(embedding: &[f64], history: &History, setup: &EpisodeSetup, world: &WorldConfig) -> Vec<f64> {
    router_features(embedding, setup.history.map(|_| history), world.d_m, world.m_v)
}

/// Runs one episode: per decision, embed, compute the local action, route, and
/// execute (with a zero-order hold while a cloud reply is pending).
pub fn run_episode(
    world: &WorldConfig,
    stack: Stack,
    router: Router,
    setup: &EpisodeSetup,
    seed: u64,
) -> Result<EpisodeOutput> {
    stack.check(world.observation_width())?;
    if let Router::Learned { nets, .. } = router {
        let want = setup.router_input_width(stack.trunk.embedding_dim());
        if nets.input_width() != want {
            return Err(Error::shape(want, nets.input_width()));
        }
    }
    if let Router::Random(p) = router {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("random routing probability {p} outside [0, 1]")));
        }
    }
    let m_e = setup.m_e();
    let (mut state, mut obs) = new_episode(world, seed, setup.mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ROUTING_STREAM);
    let mut history = History::new(setup.history.unwrap_or(0));
    let mut ledger = EnergyLedger::default();
    let mut transitions = Vec::new();
    let mut trace = Vec::new();
    let mut last_action = Action::STOP;
    let mut total_reward = 0.0;
    let mut decision_seconds = 0.0;
    let mut ticks = 0u64;
    let mut decisions = 0u64;
    let mut reached = false;

    while !state.done {
        let e = stack.trunk.embed(&obs)?;
        let local_action = stack.local.act(&e, &obs.goal)?;
        history.push(local_action, Source::Local);
        let x = features(&e, &history, setup, world);
        let (source, learned) = match router {
            Router::Learned { nets, mode } => {
                let d = nets.decide(&x, mode, &mut rng)?;
                (Source::from_decision(d.decision), Some((d, nets.value(&x)?)))
            }
            Router::AlwaysLocal => (Source::Local, None),
            Router::AlwaysCloud => (Source::Cloud, None),
            Router::Random(p) => (Source::from_decision(usize::from(rng.random_bool(p))), None),
        };

        let energy = step_energy(source, &setup.energy);
        let (plan, seconds) = match source {
            Source::Local => (vec![(local_action, false)], decision_time(source, 0.0, &setup.latency)),
            Source::Cloud => {
                // the reply is computed from this tick's embedding
                let cloud_action = stack.cloud.act(&e, &obs.goal)?;
                let latency = sample_latency(&setup.latency, &mut rng);
                let n = latency_to_ticks(latency, setup.latency.t_cloud_infer, world.dt) as usize;
                let mut plan = vec![(last_action, true); n - 1];
                plan.push((cloud_action, false));
                history.set_last(cloud_action, Source::Cloud);
                (plan, decision_time(source, latency, &setup.latency))
            }
        };
        ledger.record(source, energy);
        decision_seconds += seconds;

        let mut collisions = 0u32;
        let mut outcome = None;
        for (i, &(action, hold)) in plan.iter().enumerate() {
            let before = state.robot.position;
            let out = step(&mut state, action, world)?;
            last_action = action.clamped(world.d_m, world.m_v);
            collisions += out.collisions;
            if setup.record_trace {
                trace.push(TraceRecord {
                    tick: ticks,
                    decision: decisions,
                    source,
                    hold,
                    position: state.robot.position,
                    heading: state.robot.heading,
                    action: last_action,
                    reward: None,
                    d_geo: out.d_geo,
                    energy: if i == 0 { energy } else { 0.0 },
                    decision_seconds: if i == 0 { seconds } else { 0.0 },
                    collisions: out.collisions,
                    moved: state.robot.position.distance(before),
                    rc: 100.0 * route_progress(&state, &world.route),
                    events: out.events,
                });
            }
            ticks += 1;
            let done = out.done;
            outcome = Some(out);
            if done {
                break;
            }
        }
        let out = outcome.expect("at least one tick per decision");
        reached |= out.events.reached_goal;

        let breakdown = compose(
            &RewardInputs {
                d_geo: out.d_geo,
                v: last_action.v,
                d: last_action.d,
                energy,
                m_e,
            },
            collisions > 0,
            &setup.reward,
        )?;
        let reward = breakdown.scalar(setup.reward.kind);
        total_reward += reward;
        if let Some(last) = trace.last_mut() {
            last.reward = Some(breakdown);
        }
        obs = out.observation;

        if let Some((d, value)) = learned {
            let bootstrap = if state.done && !out.events.is_terminal(setup.mode) {
                truncation_value(&obs, &history, stack, router, setup, world)?
            } else {
                0.0
            };
            transitions.push(Transition {
                state: x,
                decision: d.decision,
                log_prob: d.log_prob,
                value,
                reward,
                done: state.done,
                bootstrap,
            });
        }
        decisions += 1;
    }

    let summary = EpisodeSummary {
        rc: 100.0 * route_progress(&state, &world.route),
        success: reached,
        collisions: state.collision_count,
        meters: state.meters_traveled,
        max_rd: state.max_deviation,
        n_local: ledger.n_local,
        n_cloud: ledger.n_cloud,
        energy: ledger.total_joules,
        decision_seconds,
        steps: decisions,
        ticks,
    };
    Ok(EpisodeOutput {
        summary,
        ledger,
        transitions,
        trace,
        total_reward,
    })
}

/// Critic estimate of the state following a truncated final step.
fn truncation_value(
    obs: &Observation,
    history: &History,
    stack: Stack,
    router: Router,
    setup: &EpisodeSetup,
    world: &WorldConfig,
) -> Result<f64> {
    let Router::Learned { nets, .. } = router else {
        return Ok(0.0);
    };
    let e = stack.trunk.embed(obs)?;
    let mut next = history.clone();
    next.push(stack.local.act(&e, &obs.goal)?, Source::Local);
    nets.value(&features(&e, &next, setup, world))
}

/// Per-episode summary recomputed from a trace alone.
pub fn summary_from_trace(trace: &[TraceRecord]) -> Result<EpisodeSummary> {
    let last = trace.last().ok_or(Error::Empty("trace"))?;
    let mut s = EpisodeSummary {
        rc: last.rc,
        success: trace.iter().any(|r| r.events.reached_goal),
        collisions: 0,
        meters: 0.0,
        max_rd: 0.0,
        n_local: 0,
        n_cloud: 0,
        energy: 0.0,
        decision_seconds: 0.0,
        steps: last.decision + 1,
        ticks: trace.len() as u64,
    };
    let mut prev_decision = None;
    for r in trace {
        s.collisions += r.collisions;
        s.meters += r.moved;
        s.max_rd = s.max_rd.max(r.d_geo);
        if prev_decision != Some(r.decision) {
            match r.source {
                Source::Local => s.n_local += 1,
                Source::Cloud => s.n_cloud += 1,
            }
            s.energy += r.energy;
            s.decision_seconds += r.decision_seconds;
            prev_decision = Some(r.decision);
        }
    }
    Ok(s)
}
