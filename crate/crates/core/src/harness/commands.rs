use super::config::{Density, Method, RunConfig};
use super::io::{
    read_curve, read_dataset, read_report, write_curve, write_dataset, write_jsonl, write_report, write_traces,
    Manifest, ReportRow,
};
use super::pipeline::{
    collect_dataset, evaluate, train_imitation, train_rl, EvalOptions, IlArtifacts, RouterVariant,
};
use crate::costs::{LatencyConfig, LatencyProfile, PayloadMode};
use crate::nn::{sha256_hex, Checkpoint};
use crate::policies::{CloudHead, LocalHead, SharedTrunk, TrainReport};
use crate::router::{RouterNets, Stack};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const TRUNK_FILE: &str = "trunk.json";
pub const LOCAL_FILE: &str = "local.json";
pub const CLOUD_FILE: &str = "cloud.json";
pub const IL_REPORT_FILE: &str = "il_report.json";
pub const ROUTER_FILE: &str = "router.json";
pub const ROUTER_BEST_FILE: &str = "router_best.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const RL_REPORT_FILE: &str = "rl_report.json";
pub const TRACES_FILE: &str = "traces.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const REPORT_FILE: &str = "report.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(text.as_bytes()))
}

fn save_checkpoint(manifest: &mut Manifest, dir: &Path, name: &str, ck: &Checkpoint) -> Result<()> {
    let hash = ck.save(&dir.join(name))?;
    manifest.checkpoints.insert(name.to_string(), hash);
    manifest.artifacts.push(name.into());
    Ok(())
}

/// Expert demonstrations at one density, written to `out/dataset.jsonl`.
pub fn cmd_collect(config: &RunConfig, density: Density, episodes: usize, out: &Path) -> Result<Manifest> {
    config.validate()?;
    ensure_dir(out)?;
    let (dataset, headers) = collect_dataset(config, density, episodes)?;
    let width = config.env.params.ray_count + 3;
    write_dataset(
        &out.join(DATASET_FILE),
        &dataset,
        &headers,
        density.pedestrians(),
        width,
        &config.fingerprint(),
    )?;
    let mut manifest = Manifest::new("collect", &config.fingerprint(), dataset.seeds.clone());
    manifest.artifacts.push(DATASET_FILE.into());
    manifest.write(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlReport {
    pub samples: usize,
    pub trunk_hash: String,
    pub cloud: TrainReport,
    pub local: TrainReport,
}

/// Trains the cloud policy and trunk, then the local head; writes three checkpoints.
pub fn cmd_train_il(config: &RunConfig, dataset_path: &Path, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let (dataset, _, width) = read_dataset(dataset_path)?;
    let expected = config.env.params.ray_count + 3;
    if width != expected {
        return Err(Error::shape(expected, width));
    }
    ensure_dir(out)?;
    let il = train_imitation(config, &dataset)?;
    let mut manifest = Manifest::new("train-il", &config.fingerprint(), vec![config.seed, config.il.seed]);
    save_checkpoint(&mut manifest, out, TRUNK_FILE, &il.trunk.to_checkpoint())?;
    save_checkpoint(&mut manifest, out, LOCAL_FILE, &il.local.to_checkpoint())?;
    save_checkpoint(&mut manifest, out, CLOUD_FILE, &il.cloud.to_checkpoint())?;
    let report = IlReport {
        samples: dataset.len(),
        trunk_hash: il.trunk.hash(),
        cloud: il.cloud_report,
        local: il.local_report,
    };
    write_json(&out.join(IL_REPORT_FILE), &report)?;
    manifest.artifacts.push(IL_REPORT_FILE.into());
    manifest.write(out)
}

/// Trunk and heads read back from a `train-il` output directory.
#[derive(Debug, Clone)]
pub struct IlCheckpoints {
    pub trunk: SharedTrunk,
    pub local: LocalHead,
    pub cloud: CloudHead,
}

impl IlCheckpoints {
    pub fn stack(&self) -> Stack<'_> {
        Stack {
            trunk: &self.trunk,
            local: &self.local,
            cloud: &self.cloud,
        }
    }

    /// Loads and cross-checks the three checkpoints against each other and the config.
    pub fn load(dir: &Path, config: &RunConfig) -> Result<Self> {
        let trunk = SharedTrunk::from_checkpoint(&Checkpoint::load(&dir.join(TRUNK_FILE))?)?;
        let local = LocalHead::from_checkpoint(&Checkpoint::load(&dir.join(LOCAL_FILE))?)?;
        let cloud = CloudHead::from_checkpoint(&Checkpoint::load(&dir.join(CLOUD_FILE))?)?;
        let hash = trunk.hash();
        if local.trunk_hash != hash || cloud.trunk_hash != hash {
            return Err(Error::Schema("heads were trained against a different trunk".into()));
        }
        let dim = config.models.preset.embedding_dim;
        if trunk.embedding_dim() != dim {
            return Err(Error::shape(format!("embedding_dim {dim}"), format!("embedding_dim {}", trunk.embedding_dim())));
        }
        let checked = IlCheckpoints { trunk, local, cloud };
        checked.stack().check(config.env.params.ray_count + 3)?;
        Ok(checked)
    }
}

impl From<IlArtifacts> for IlCheckpoints {
    fn from(il: IlArtifacts) -> Self {
        IlCheckpoints {
            trunk: il.trunk,
            local: il.local,
            cloud: il.cloud,
        }
    }
}

/// Router metadata stored in its checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterMeta {
    pub variant: RouterVariant,
    pub trunk_hash: String,
    pub input_width: usize,
}

fn router_checkpoint(nets: &RouterNets, meta: &RouterMeta) -> Checkpoint {
    nets.to_checkpoint().with_meta("router", meta)
}

/// Loads a router and its metadata, checking it was trained on `trunk_hash`.
pub fn load_router(path: &Path, trunk_hash: &str) -> Result<(RouterNets, RouterMeta)> {
    let ck = Checkpoint::load(path)?;
    let nets = RouterNets::from_checkpoint(&ck)?;
    let meta: RouterMeta = ck.meta("router")?;
    if meta.trunk_hash != trunk_hash {
        return Err(Error::Schema("router was trained against a different trunk".into()));
    }
    if meta.input_width != nets.input_width() {
        return Err(Error::shape(meta.input_width, nets.input_width()));
    }
    Ok((nets, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlReport {
    pub variant: RouterVariant,
    pub seed: u64,
    pub episodes_run: usize,
    pub best_checkpoint_index: Option<usize>,
    pub best_ens_mean: Option<f64>,
    pub diverged: Option<String>,
    pub final_policy_loss: f64,
    pub final_value_loss: f64,
}

/// Router training on top of an imitation directory.
pub fn cmd_train_rl(config: &RunConfig, il_dir: &Path, variant: RouterVariant, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let il = IlCheckpoints::load(il_dir, config)?;
    ensure_dir(out)?;
    let result = train_rl(config, il.stack(), variant, config.seed)?;
    let meta = RouterMeta {
        variant,
        trunk_hash: il.trunk.hash(),
        input_width: result.nets.input_width(),
    };
    let mut manifest = Manifest::new("train-rl", &config.fingerprint(), vec![config.seed]);
    save_checkpoint(&mut manifest, out, ROUTER_FILE, &router_checkpoint(&result.nets, &meta))?;
    save_checkpoint(&mut manifest, out, ROUTER_BEST_FILE, &router_checkpoint(&result.best, &meta))?;
    write_curve(&out.join(CURVE_FILE), &result.curve.points)?;
    manifest.artifacts.push(CURVE_FILE.into());
    let best = result
        .curve
        .points
        .iter()
        .fold(None::<&crate::router::CurvePoint>, |b, p| match b {
            Some(b) if b.ens_mean >= p.ens_mean => Some(b),
            _ => Some(p),
        });
    let report = RlReport {
        variant,
        seed: config.seed,
        episodes_run: result.episodes_run,
        best_checkpoint_index: best.map(|p| p.checkpoint_index),
        best_ens_mean: best.map(|p| p.ens_mean),
        diverged: result.diverged,
        final_policy_loss: result.last_update.policy_loss,
        final_value_loss: result.last_update.value_loss,
    };
    write_json(&out.join(RL_REPORT_FILE), &report)?;
    manifest.artifacts.push(RL_REPORT_FILE.into());
    manifest.write(out)
}

/// Which checkpoint of a router directory to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouterPick {
    #[default]
    Best,
    Final,
}

#[derive(Debug, Clone)]
pub struct EvalRequest {
    pub method: Method,
    pub density: Option<Density>,
    pub profile: Option<LatencyProfile>,
    pub payload: Option<PayloadMode>,
    pub il_dir: Option<PathBuf>,
    pub router_dir: Option<PathBuf>,
    pub router_pick: RouterPick,
    pub traces: bool,
}

impl EvalRequest {
    pub fn new(method: Method) -> Self {
        EvalRequest {
            method,
            density: None,
            profile: None,
            payload: None,
            il_dir: None,
            router_dir: None,
            router_pick: RouterPick::Best,
            traces: true,
        }
    }
}

/// Deterministic evaluation of one method; writes traces, summaries and one report row.
pub fn cmd_eval(config: &RunConfig, request: &EvalRequest, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let il_dir = request
        .il_dir
        .clone()
        .or_else(|| config.models.il_checkpoints.clone())
        .ok_or_else(|| Error::Usage("imitation checkpoints required (--il)".into()))?;
    let il = IlCheckpoints::load(&il_dir, config)?;
    let mut checkpoints = Vec::new();
    let router = if request.method.is_learned() {
        let dir = request
            .router_dir
            .clone()
            .or_else(|| config.models.router_checkpoint.clone())
            .ok_or_else(|| Error::Usage(format!("method {} needs --router", request.method.label())))?;
        let name = match request.router_pick {
            RouterPick::Best => ROUTER_BEST_FILE,
            RouterPick::Final => ROUTER_FILE,
        };
        let (nets, meta) = load_router(&dir.join(name), &il.trunk.hash())?;
        let wanted = RouterVariant::for_method(request.method, config.models.history_len);
        if wanted != Some(meta.variant) {
            return Err(Error::Usage(format!(
                "router in {} was trained as {:?}, not for {}",
                dir.display(),
                meta.variant,
                request.method.label()
            )));
        }
        checkpoints.push(dir.join(name));
        Some(nets)
    } else {
        None
    };
    let density = request.density.unwrap_or(config.eval.density);
    let mut options = EvalOptions::new(config, request.method, density);
    if let Some(p) = request.payload {
        options.payload = p;
    }
    if let Some(profile) = request.profile {
        options.latency = LatencyConfig::from_profile(profile);
    }
    options.record_traces = request.traces;
    let outcome = evaluate(config, il.stack(), router.as_ref(), &options)?;

    ensure_dir(out)?;
    let seeds = outcome.episodes.iter().map(|e| e.seed).collect();
    let mut manifest = Manifest::new("eval", &config.fingerprint(), seeds);
    for name in [TRUNK_FILE, LOCAL_FILE, CLOUD_FILE] {
        checkpoints.push(il_dir.join(name));
    }
    for path in checkpoints {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        manifest.checkpoints.insert(path.display().to_string(), sha256_hex(&bytes));
    }
    if request.traces {
        write_traces(&out.join(TRACES_FILE), &outcome.episodes, &outcome.traces)?;
        manifest.artifacts.push(TRACES_FILE.into());
    }
    write_jsonl(&out.join(SUMMARIES_FILE), &outcome.episodes)?;
    manifest.artifacts.push(SUMMARIES_FILE.into());
    let row = ReportRow::new(&request.method.label(), density.name(), &outcome.report);
    write_report(&out.join(REPORT_FILE), &[row])?;
    manifest.artifacts.push(REPORT_FILE.into());
    manifest.write(out)
}

fn dir_label(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty())
        .unwrap_or_else(|| "run".into())
}

/// Merges report rows from evaluation directories and copies training curves from router directories.
pub fn cmd_report(in_dirs: &[PathBuf], out: &Path) -> Result<Manifest> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for dir in in_dirs {
        let report = dir.join(REPORT_FILE);
        let curve = dir.join(CURVE_FILE);
        let mut found = false;
        if report.exists() {
            rows.extend(read_report(&report)?);
            found = true;
        }
        if curve.exists() {
            curves.push((dir_label(dir), read_curve(&curve)?));
            found = true;
        }
        if !found {
            return Err(Error::InvalidInput(format!("{} has no report or curve", dir.display())));
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("report rows"));
    }
    if rows.iter().any(|r| r.schema_version != rows[0].schema_version) {
        return Err(Error::Schema("input reports have different schema versions".into()));
    }
    ensure_dir(out)?;
    let fingerprints: Vec<&str> = rows.iter().map(|r| r.config_fingerprint.as_str()).collect();
    let fingerprint = if fingerprints.iter().all(|f| *f == fingerprints[0]) {
        fingerprints[0].to_string()
    } else {
        sha256_hex(fingerprints.join(",").as_bytes())
    };
    let mut manifest = Manifest::new("report", &fingerprint, Vec::new());
    write_report(&out.join(REPORT_FILE), &rows)?;
    manifest.artifacts.push(REPORT_FILE.into());
    let mut used = std::collections::BTreeSet::new();
    for (label, points) in curves {
        let mut name = format!("curve_{label}.csv");
        let mut n = 1;
        while !used.insert(name.clone()) {
            n += 1;
            name = format!("curve_{label}_{n}.csv");
        }
        write_curve(&out.join(&name), &points)?;
        manifest.artifacts.push(name.into());
    }
    manifest.write(out)
}
