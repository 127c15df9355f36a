use crate::costs::{EnergyConfig, LatencyConfig, PayloadMode};
use crate::env::{route, Arena, GeodesicMode, WorldConfig, ARENA_MARGIN};
use crate::metrics::MetricConfig;
use crate::nn::sha256_hex;
use crate::policies::{ActionScale, PolicyPreset, TrainHyper};
use crate::reward::RewardConfig;
use crate::router::{PpoConfig, DEFAULT_HISTORY_LEN, EVAL_INTERVAL};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Pedestrian density presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Low,
    Medium,
    High,
    Crowd,
}

impl Density {
    pub const ALL: [Density; 4] = [Density::Low, Density::Medium, Density::High, Density::Crowd];

    pub fn pedestrians(self) -> usize {
        match self {
            Density::Low => 5,
            Density::Medium => 15,
            Density::High => 30,
            Density::Crowd => 70,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Density::Low => "low",
            Density::Medium => "medium",
            Density::High => "high",
            Density::Crowd => "crowd",
        }
    }
}

impl std::str::FromStr for Density {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Density::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown density {s:?} (low, medium, high, crowd)")))
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluated routing methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Unilcd,
    UnilcdNoHistory,
    LocalOnly,
    CloudOnly,
    Random(f64),
    Additive,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Unilcd => "unilcd".into(),
            Method::UnilcdNoHistory => "unilcd-no-history".into(),
            Method::LocalOnly => "local-only".into(),
            Method::CloudOnly => "cloud-only".into(),
            Method::Random(p) => format!("random:{p}"),
            Method::Additive => "additive".into(),
        }
    }

    pub fn is_learned(&self) -> bool {
        matches!(self, Method::Unilcd | Method::UnilcdNoHistory | Method::Additive)
    }

    /// Cloud-only and random selection send the raw observation; the learned routers send embeddings.
    pub fn default_payload(&self) -> PayloadMode {
        match self {
            Method::CloudOnly | Method::Random(_) => PayloadMode::Raw,
            _ => PayloadMode::Embedding,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unilcd" => Method::Unilcd,
            "unilcd-no-history" => Method::UnilcdNoHistory,
            "local-only" => Method::LocalOnly,
            "cloud-only" => Method::CloudOnly,
            "additive" => Method::Additive,
            other => {
                let p = other
                    .strip_prefix("random:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| Error::Usage(format!("unknown method {other:?}")))?;
                Method::Random(p)
            }
        })
    }
}

/// World parameters shared by every route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldParams {
    pub route_length_max: f64,
    pub pedestrian_speed: [f64; 2],
    pub arena_margin: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub robot_radius: f64,
    pub pedestrian_radius: f64,
    pub goal_radius: f64,
    pub deviation_truncate: f64,
    pub sensing_range: f64,
    pub ray_count: usize,
    pub d_m: f64,
    pub m_v: f64,
    pub spawn_half_width: f64,
    pub spawn_clearance: f64,
    pub collision_grace: f64,
    pub geodesic: GeodesicMode,
}

impl Default for WorldParams {
    fn default() -> Self {
        let w = WorldConfig::fixture(0);
        WorldParams {
            route_length_max: w.route_length_max,
            pedestrian_speed: w.pedestrian_speed,
            arena_margin: ARENA_MARGIN,
            dt: w.dt,
            max_steps: w.max_steps,
            robot_radius: w.robot_radius,
            pedestrian_radius: w.pedestrian_radius,
            goal_radius: w.goal_radius,
            deviation_truncate: w.deviation_truncate,
            sensing_range: w.sensing_range,
            ray_count: w.ray_count,
            d_m: w.d_m,
            m_v: w.m_v,
            spawn_half_width: w.spawn_half_width,
            spawn_clearance: w.spawn_clearance,
            collision_grace: w.collision_grace,
            geodesic: w.geodesic,
        }
    }
}

impl WorldParams {
    /// World on fixture route `index` with `pedestrians` walkers.
    pub fn world(&self, index: usize, pedestrians: usize) -> WorldConfig {
        let route = route::fixture(index);
        WorldConfig {
            arena: Arena::around(&route, self.arena_margin),
            route,
            route_length_max: self.route_length_max,
            pedestrian_count: pedestrians,
            pedestrian_speed: self.pedestrian_speed,
            dt: self.dt,
            max_steps: self.max_steps,
            robot_radius: self.robot_radius,
            pedestrian_radius: self.pedestrian_radius,
            goal_radius: self.goal_radius,
            deviation_truncate: self.deviation_truncate,
            sensing_range: self.sensing_range,
            ray_count: self.ray_count,
            d_m: self.d_m,
            m_v: self.m_v,
            spawn_half_width: self.spawn_half_width,
            spawn_clearance: self.spawn_clearance,
            collision_grace: self.collision_grace,
            geodesic: self.geodesic,
        }
    }

    pub fn scale(&self) -> ActionScale {
        ActionScale { d_m: self.d_m, m_v: self.m_v }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub params: WorldParams,
    /// Fixture indices used for demonstrations and router training.
    pub train_routes: Vec<usize>,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection {
            params: WorldParams::default(),
            train_routes: (0..route::FIXTURE_COUNT).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub preset: PolicyPreset,
    /// Router history length `k`.
    pub history_len: usize,
    /// Directory holding trunk/local/cloud checkpoints.
    pub il_checkpoints: Option<PathBuf>,
    /// Directory holding a router checkpoint.
    pub router_checkpoint: Option<PathBuf>,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            preset: PolicyPreset::default(),
            history_len: DEFAULT_HISTORY_LEN,
            il_checkpoints: None,
            router_checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostsSection {
    pub energy: EnergyConfig,
    pub latency: LatencyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectSection {
    pub episodes: usize,
    pub density: Density,
}

impl Default for CollectSection {
    fn default() -> Self {
        CollectSection {
            episodes: 60,
            density: Density::High,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlSection {
    pub density: Density,
    /// Seeds of the periodic greedy evaluation.
    pub eval_seeds: Vec<u64>,
    pub eval_interval: usize,
}

impl Default for RlSection {
    fn default() -> Self {
        RlSection {
            density: Density::High,
            eval_seeds: (0..10).map(|i| 1_000_000 + i).collect(),
            eval_interval: EVAL_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub routes: Vec<usize>,
    pub episodes_per_route: usize,
    pub density: Density,
    /// Each seed draws its own set of episodes on every route.
    pub seeds: Vec<u64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            routes: (0..5).collect(),
            episodes_per_route: 30,
            density: Density::High,
            seeds: vec![0],
        }
    }
}

/// One document that fully determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub env: EnvSection,
    pub models: ModelsSection,
    pub collect: CollectSection,
    pub il: TrainHyper,
    pub ppo: PpoConfig,
    pub rl: RlSection,
    pub reward: RewardConfig,
    pub costs: CostsSection,
    pub metrics: MetricConfig,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            env: EnvSection::default(),
            models: ModelsSection::default(),
            collect: CollectSection::default(),
            il: TrainHyper::default(),
            ppo: PpoConfig::default(),
            rl: RlSection::default(),
            reward: RewardConfig::default(),
            costs: CostsSection::default(),
            metrics: MetricConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every section and the cross-section consistency rules.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let p = &self.env.params;
        for &r in self.env.train_routes.iter().chain(&self.eval.routes) {
            if r >= route::FIXTURE_COUNT {
                return fail(format!("route index {r} out of range (0..{})", route::FIXTURE_COUNT));
            }
        }
        if self.eval.seeds.is_empty() {
            return fail("eval.seeds must be non-empty".into());
        }
        if self.env.train_routes.is_empty() || self.eval.routes.is_empty() {
            return fail("train_routes and eval.routes must be non-empty".into());
        }
        p.world(0, 0).validate()?;
        self.reward.validate()?;
        self.costs.energy.validate()?;
        self.costs.latency.validate()?;
        self.metrics.validate()?;
        self.ppo.validate()?;
        if (self.reward.m_v - p.m_v).abs() > 1e-12 || (self.reward.d_m - p.d_m).abs() > 1e-12 {
            return fail("reward.m_v/d_m must equal env.params.m_v/d_m".into());
        }
        if let Some(m_e) = self.reward.m_e {
            if m_e + 1e-12 < self.costs.energy.max_step_energy() {
                return fail(format!(
                    "reward.m_e {m_e} below the costliest step {}",
                    self.costs.energy.max_step_energy()
                ));
            }
        }
        if (self.metrics.e_local - self.costs.energy.e_local).abs() > 1e-12
            || (self.metrics.e_cloud - self.costs.energy.e_cloud).abs() > 1e-12
        {
            return fail("metrics.e_local/e_cloud must mirror costs.energy".into());
        }
        if self.models.preset.embedding_dim == 0 {
            return fail("embedding_dim must be positive".into());
        }
        if self.il.batch_size == 0 || !(self.il.lr > 0.0) || !(0.0..1.0).contains(&self.il.val_fraction) {
            return fail("il: batch_size, lr and val_fraction out of range".into());
        }
        if self.rl.eval_seeds.is_empty() || self.rl.eval_interval == 0 {
            return fail("rl.eval_seeds must be non-empty and eval_interval positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        sha256_hex(text.as_bytes())
    }
}
