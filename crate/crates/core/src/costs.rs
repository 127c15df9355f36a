//! Energy accounting and stochastic communication latency.

use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Where a navigation action was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Local,
    Cloud,
}

impl Source {
    /// History indicator: 0 local, 1 cloud.
    pub fn flag(self) -> f64 {
        match self {
            Source::Local => 0.0,
            Source::Cloud => 1.0,
        }
    }

    pub fn from_decision(decision: usize) -> Self {
        if decision == 0 {
            Source::Local
        } else {
            Source::Cloud
        }
    }
}

/// What is sent to the cloud on an offloaded step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadMode {
    Raw,
    #[default]
    Embedding,
}

impl std::str::FromStr for PayloadMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(PayloadMode::Raw),
            "embedding" => Ok(PayloadMode::Embedding),
            other => Err(Error::Usage(format!("unknown payload mode {other:?}"))),
        }
    }
}

/// How communication energies are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommEnergySource {
    /// The stated joule figures for each payload.
    #[default]
    Stated,
    /// Payload bytes times joules per byte.
    Bytes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Local computation per step, J.
    pub e_local: f64,
    /// Cloud computation plus embedding transmission per step, J.
    pub e_cloud: f64,
    pub joule_per_byte: f64,
    pub raw_comm_energy: f64,
    pub embedding_comm_energy: f64,
    /// Exposed for flop-based estimates; not used by the defaults.
    pub joule_per_flop: f64,
    pub raw_bytes: f64,
    pub embedding_bytes: f64,
    pub comm_energy: CommEnergySource,
    pub payload_mode: PayloadMode,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            e_local: 0.15,
            e_cloud: 1.5,
            joule_per_byte: 6.94e-5,
            raw_comm_energy: 1.55,
            embedding_comm_energy: 0.02518,
            joule_per_flop: 0.095,
            // 480x480x3 image and a 24x24 float32 embedding
            raw_bytes: 691_200.0,
            embedding_bytes: 2_304.0,
            comm_energy: CommEnergySource::Stated,
            payload_mode: PayloadMode::Embedding,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.e_local,
            self.e_cloud,
            self.joule_per_byte,
            self.raw_comm_energy,
            self.embedding_comm_energy,
            self.joule_per_flop,
            self.raw_bytes,
            self.embedding_bytes,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("energies must be finite and non-negative".into()));
        }
        if self.e_cloud < self.e_local {
            return Err(Error::Config("e_cloud must be at least e_local".into()));
        }
        Ok(())
    }

    pub fn with_payload(mut self, mode: PayloadMode) -> Self {
        self.payload_mode = mode;
        self
    }

    fn comm_energies(&self) -> (f64, f64) {
        match self.comm_energy {
            CommEnergySource::Stated => (self.raw_comm_energy, self.embedding_comm_energy),
            CommEnergySource::Bytes => (
                self.raw_bytes * self.joule_per_byte,
                self.embedding_bytes * self.joule_per_byte,
            ),
        }
    }

    /// Largest energy a single step can cost under this configuration.
    pub fn max_step_energy(&self) -> f64 {
        step_energy(Source::Cloud, self).max(step_energy(Source::Local, self))
    }
}

/// Energy charged for one decision.
pub fn step_energy(source: Source, config: &EnergyConfig) -> f64 {
    match (source, config.payload_mode) {
        (Source::Local, _) => config.e_local,
        (Source::Cloud, PayloadMode::Embedding) => config.e_cloud,
        (Source::Cloud, PayloadMode::Raw) => {
            // swap the embedding transmission share for the raw one
            let (raw, embedding) = config.comm_energies();
            config.e_cloud - embedding + raw
        }
    }
}

/// Per-episode step counts and energy log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub n_local: u64,
    pub n_cloud: u64,
    pub total_joules: f64,
    pub log: Vec<(Source, f64)>,
}

impl EnergyLedger {
    pub fn record(&mut self, source: Source, joules: f64) {
        match source {
            Source::Local => self.n_local += 1,
            Source::Cloud => self.n_cloud += 1,
        }
        self.total_joules += joules;
        self.log.push((source, joules));
    }

    pub fn steps(&self) -> u64 {
        self.n_local + self.n_cloud
    }
}

/// Episode energy: the closed form `E_local*N_local + E_cloud*N_cloud` in embedding
/// mode, otherwise the sum of the per-step log.
pub fn episode_energy(ledger: &EnergyLedger, config: &EnergyConfig) -> Result<f64> {
    let locals = ledger.log.iter().filter(|(s, _)| *s == Source::Local).count() as u64;
    let clouds = ledger.log.len() as u64 - locals;
    if locals != ledger.n_local || clouds != ledger.n_cloud {
        return Err(Error::InvalidInput(format!(
            "ledger counts ({}, {}) disagree with log ({locals}, {clouds})",
            ledger.n_local, ledger.n_cloud
        )));
    }
    Ok(match config.payload_mode {
        PayloadMode::Embedding => {
            config.e_local * ledger.n_local as f64 + config.e_cloud * ledger.n_cloud as f64
        }
        PayloadMode::Raw => ledger.log.iter().map(|(_, j)| j).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LatencyModel {
    /// Normal round trip clamped below at zero.
    Gaussian { mean: f64, std: f64 },
    /// `scale * U^(-1/shape)`.
    Pareto { scale: f64, shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyProfile {
    /// Gaussian round trip with mean 0.5 s and standard deviation 0.1 s.
    #[serde(alias = "paper-supp")]
    Nominal,
    /// Gaussian round trip with mean 0.1 s and standard deviation 0.02 s,
    /// consistent with a cloud-only rate of about 7.1 decisions per second.
    #[default]
    TableConsistent,
}

impl std::str::FromStr for LatencyProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" | "paper-supp" => Ok(LatencyProfile::Nominal),
            "table-consistent" => Ok(LatencyProfile::TableConsistent),
            other => Err(Error::Usage(format!("unknown latency profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    pub model: LatencyModel,
    /// Local inference time per decision, s.
    pub t_local_infer: f64,
    /// Cloud inference time per decision, s.
    pub t_cloud_infer: f64,
    pub profile: LatencyProfile,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self::from_profile(LatencyProfile::default())
    }
}

impl LatencyConfig {
    pub fn from_profile(profile: LatencyProfile) -> Self {
        let model = match profile {
            LatencyProfile::Nominal => LatencyModel::Gaussian { mean: 0.5, std: 0.1 },
            LatencyProfile::TableConsistent => LatencyModel::Gaussian { mean: 0.1, std: 0.02 },
        };
        LatencyConfig {
            model,
            t_local_infer: 0.0153,
            t_cloud_infer: 0.040,
            profile,
        }
    }

    /// Zero round trip and zero inference times.
    pub fn instantaneous() -> Self {
        LatencyConfig {
            model: LatencyModel::Gaussian { mean: 0.0, std: 0.0 },
            t_local_infer: 0.0,
            t_cloud_infer: 0.0,
            profile: LatencyProfile::TableConsistent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.model {
            LatencyModel::Gaussian { mean, std } => mean >= 0.0 && std >= 0.0,
            LatencyModel::Pareto { scale, shape } => scale > 0.0 && shape > 0.0,
        };
        if !ok || !(self.t_local_infer >= 0.0 && self.t_cloud_infer >= 0.0) {
            return Err(Error::Config("latency parameters must be non-negative".into()));
        }
        Ok(())
    }
}

/// One round-trip latency draw, seconds.
pub fn sample_latency<R: Rng + ?Sized>(config: &LatencyConfig, rng: &mut R) -> f64 {
    match config.model {
        LatencyModel::Gaussian { mean, std } => {
            if std == 0.0 {
                return mean.max(0.0);
            }
            let normal = Normal::new(mean, std).expect("validated latency parameters");
            normal.sample(rng).max(0.0)
        }
        LatencyModel::Pareto { scale, shape } => {
            // U in (0, 1]
            let u: f64 = 1.0 - rng.random::<f64>();
            scale * u.powf(-1.0 / shape)
        }
    }
}

/// Control ticks occupied by a cloud call, at least one.
pub fn latency_to_ticks(latency: f64, extra_compute: f64, dt: f64) -> u32 {
    let ticks = ((latency + extra_compute) / dt - 1e-9).ceil();
    ticks.max(1.0) as u32
}

/// Wall time of one decision: local inference, or round trip plus cloud inference.
pub fn decision_time(source: Source, sampled_latency: f64, config: &LatencyConfig) -> f64 {
    match source {
        Source::Local => config.t_local_infer,
        Source::Cloud => sampled_latency + config.t_cloud_infer,
    }
}

/// Mean decision time of a cloud call under `config`, s.
pub fn mean_cloud_time(config: &LatencyConfig) -> f64 {
    let rtt = match config.model {
        LatencyModel::Gaussian { mean, .. } => mean,
        LatencyModel::Pareto { scale, shape } if shape > 1.0 => scale * shape / (shape - 1.0),
        LatencyModel::Pareto { .. } => f64::INFINITY,
    };
    rtt + config.t_cloud_infer
}
