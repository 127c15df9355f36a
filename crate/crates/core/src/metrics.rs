//! Navigation Score, Ecological Navigation Score and aggregate reporting.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-episode counters the report is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// Route completion, percent.
    pub rc: f64,
    pub success: bool,
    pub collisions: u32,
    /// Meters actually traveled.
    pub meters: f64,
    /// Largest route deviation observed, m.
    pub max_rd: f64,
    pub n_local: u64,
    pub n_cloud: u64,
    /// Episode energy, J.
    pub energy: f64,
    /// Summed decision time, s.
    pub decision_seconds: f64,
    /// Routing decisions taken (`n_local + n_cloud`).
    pub steps: u64,
    /// Control ticks simulated.
    pub ticks: u64,
}

/// How NS is averaged over episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NsMode {
    /// NS per episode, then the mean.
    #[default]
    PerEpisode,
    /// NS from mean RC and pooled collisions per meter.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    /// Infraction penalty base.
    pub p_i: f64,
    /// Route deviation threshold, m.
    pub epsilon_rd: f64,
    pub e_local: f64,
    pub e_cloud: f64,
    pub ns_mode: NsMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            p_i: 0.5,
            epsilon_rd: 1.5,
            e_local: 0.15,
            e_cloud: 1.5,
            ns_mode: NsMode::PerEpisode,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_i > 0.0 && self.p_i <= 1.0) {
            return Err(Error::Config("p_i must be in (0, 1]".into()));
        }
        if !(self.epsilon_rd > 0.0) {
            return Err(Error::Config("epsilon_rd must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub ens: f64,
    pub ns: f64,
    pub sr: f64,
    pub rc: f64,
    /// Collisions per meter.
    pub ic: f64,
    /// Joules per meter.
    pub energy_per_meter: f64,
    pub fps: f64,
    pub episodes: usize,
    pub fingerprint: String,
}

/// 0.8 when the deviation strictly exceeds the threshold, else 1.0.
pub fn deviation_penalty(max_rd: f64, config: &MetricConfig) -> f64 {
    if max_rd > config.epsilon_rd {
        0.8
    } else {
        1.0
    }
}

/// `RC * P_I^IC * P_RD`, in percent.
pub fn navigation_score(rc: f64, ic: f64, p_rd: f64, config: &MetricConfig) -> f64 {
    rc * config.p_i.powf(ic) * p_rd
}

/// `clamp(1 - Energy / N_E, 0, 1)` with `N_E = (E_local + E_cloud) * (N_local + N_cloud)`.
pub fn energy_penalty(energy: f64, n_local: u64, n_cloud: u64, config: &MetricConfig) -> Result<f64> {
    let steps = n_local + n_cloud;
    if steps == 0 {
        return Err(Error::InvalidInput("energy penalty needs at least one step".into()));
    }
    let norm = (config.e_local + config.e_cloud) * steps as f64;
    Ok((1.0 - energy / norm).clamp(0.0, 1.0))
}

pub fn ecological_navigation_score(p_e: f64, ns: f64) -> f64 {
    p_e * ns
}

fn infraction_rate(collisions: f64, meters: f64) -> f64 {
    if collisions == 0.0 {
        0.0
    } else if meters > 0.0 {
        collisions / meters
    } else {
        f64::INFINITY
    }
}

impl EpisodeSummary {
    pub fn infraction_rate(&self) -> f64 {
        infraction_rate(self.collisions as f64, self.meters)
    }

    pub fn navigation_score(&self, config: &MetricConfig) -> f64 {
        navigation_score(
            self.rc,
            self.infraction_rate(),
            deviation_penalty(self.max_rd, config),
            config,
        )
    }

    pub fn energy_penalty(&self, config: &MetricConfig) -> Result<f64> {
        energy_penalty(self.energy, self.n_local, self.n_cloud, config)
    }
}

/// Averages a batch of episodes into one report row. Rates (IC, J/m, FPS) use pooled sums.
pub fn aggregate(episodes: &[EpisodeSummary], config: &MetricConfig) -> Result<AggregateReport> {
    if episodes.is_empty() {
        return Err(Error::Empty("episode list"));
    }
    let n = episodes.len() as f64;
    let meters: f64 = episodes.iter().map(|e| e.meters).sum();
    if !(meters > 0.0) {
        return Err(Error::InvalidInput("episodes traveled zero meters".into()));
    }
    let collisions: f64 = episodes.iter().map(|e| e.collisions as f64).sum();
    let energy: f64 = episodes.iter().map(|e| e.energy).sum();
    let steps: u64 = episodes.iter().map(|e| e.steps).sum();
    let seconds: f64 = episodes.iter().map(|e| e.decision_seconds).sum();
    let rc = episodes.iter().map(|e| e.rc).sum::<f64>() / n;
    let sr = 100.0 * episodes.iter().filter(|e| e.success).count() as f64 / n;
    let ic = collisions / meters;

    let (ns, ens) = match config.ns_mode {
        NsMode::PerEpisode => {
            let mut ns_sum = 0.0;
            let mut ens_sum = 0.0;
            for e in episodes {
                let ns = e.navigation_score(config);
                ns_sum += ns;
                ens_sum += ecological_navigation_score(e.energy_penalty(config)?, ns);
            }
            (ns_sum / n, ens_sum / n)
        }
        NsMode::Pooled => {
            let p_rd = episodes
                .iter()
                .map(|e| deviation_penalty(e.max_rd, config))
                .sum::<f64>()
                / n;
            let n_local = episodes.iter().map(|e| e.n_local).sum();
            let n_cloud = episodes.iter().map(|e| e.n_cloud).sum();
            let ns = navigation_score(rc, ic, p_rd, config);
            let p_e = energy_penalty(energy, n_local, n_cloud, config)?;
            (ns, ecological_navigation_score(p_e, ns))
        }
    };

    Ok(AggregateReport {
        ens,
        ns,
        sr,
        rc,
        ic,
        energy_per_meter: energy / meters,
        fps: if seconds > 0.0 { steps as f64 / seconds } else { f64::INFINITY },
        episodes: episodes.len(),
        fingerprint: String::new(),
    })
}
