use super::config::CONFIG_SCHEMA_VERSION;
use super::pipeline::{EpisodeHeader, EpisodeRecord};
use crate::env::{Action, Observation};
use crate::metrics::AggregateReport;
use crate::policies::{ImitationDataset, Sample};
use crate::router::{CurvePoint, TraceRecord};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const DATASET_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Fixed report column order.
pub const REPORT_HEADER: [&str; 12] = [
    "method",
    "density",
    "ENS",
    "NS",
    "SR",
    "RC",
    "Infract.",
    "Energy",
    "FPS",
    "episodes",
    "config_fingerprint",
    "schema_version",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetLine {
    Header {
        schema_version: u32,
        density: String,
        pedestrian_count: usize,
        episodes: usize,
        observation_width: usize,
        config_fingerprint: String,
    },
    Episode(EpisodeHeader),
    Sample {
        observation: Observation,
        action: Action,
    },
}

/// Writes the file header, then each episode header followed by its samples.
pub fn write_dataset(
    path: &Path,
    dataset: &ImitationDataset,
    headers: &[EpisodeHeader],
    pedestrian_count: usize,
    observation_width: usize,
    config_fingerprint: &str,
) -> Result<()> {
    let total: usize = headers.iter().map(|h| h.samples).sum();
    if total != dataset.len() {
        return Err(Error::InvalidInput("episode headers do not cover the samples".into()));
    }
    let mut w = create(path)?;
    let header = DatasetLine::Header {
        schema_version: DATASET_SCHEMA_VERSION,
        density: dataset.density.clone(),
        pedestrian_count,
        episodes: headers.len(),
        observation_width,
        config_fingerprint: config_fingerprint.to_string(),
    };
    write_line(&mut w, path, &header)?;
    let mut next = 0;
    for h in headers {
        write_line(&mut w, path, &DatasetLine::Episode(h.clone()))?;
        for s in &dataset.samples[next..next + h.samples] {
            write_line(
                &mut w,
                path,
                &DatasetLine::Sample {
                    observation: s.observation.clone(),
                    action: s.action,
                },
            )?;
        }
        next += h.samples;
    }
    finish(w, path)
}

/// Reads a dataset file, checking its schema version and per-episode sample counts.
pub fn read_dataset(path: &Path) -> Result<(ImitationDataset, Vec<EpisodeHeader>, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("{} is empty", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    let DatasetLine::Header {
        schema_version,
        density,
        episodes,
        observation_width,
        ..
    } = serde_json::from_str(&first)?
    else {
        return Err(Error::Schema("dataset must start with a header line".into()));
    };
    if schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::Schema(format!("dataset schema {schema_version} unsupported")));
    }
    let mut dataset = ImitationDataset {
        density,
        ..Default::default()
    };
    let mut headers: Vec<EpisodeHeader> = Vec::new();
    let mut in_episode = 0usize;
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match serde_json::from_str(&line)? {
            DatasetLine::Header { .. } => {
                return Err(Error::Schema(format!("line {}: repeated header", n + 2)));
            }
            DatasetLine::Episode(h) => {
                if let Some(prev) = headers.last() {
                    if prev.samples != in_episode {
                        return Err(Error::Schema(format!("episode {} sample count mismatch", prev.index)));
                    }
                }
                dataset.seeds.push(h.seed);
                headers.push(h);
                in_episode = 0;
            }
            DatasetLine::Sample { observation, action } => {
                if headers.is_empty() {
                    return Err(Error::Schema("sample before any episode header".into()));
                }
                if observation.features().len() != observation_width {
                    return Err(Error::shape(observation_width, observation.features().len()));
                }
                dataset.samples.push(Sample { observation, action });
                in_episode += 1;
            }
        }
    }
    if headers.last().is_some_and(|h| h.samples != in_episode) || headers.len() != episodes {
        return Err(Error::Schema("dataset truncated".into()));
    }
    Ok((dataset, headers, observation_width))
}

/// One trace line: episode identity plus the tick record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub eval_seed: u64,
    pub route: usize,
    pub episode: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub record: TraceRecord,
}

pub fn write_traces(path: &Path, episodes: &[EpisodeRecord], traces: &[Vec<TraceRecord>]) -> Result<()> {
    let mut w = create(path)?;
    for (e, trace) in episodes.iter().zip(traces) {
        for record in trace {
            let line = TraceLine {
                eval_seed: e.eval_seed,
                route: e.route,
                episode: e.episode,
                seed: e.seed,
                record: record.clone(),
            };
            write_line(&mut w, path, &line)?;
        }
    }
    finish(w, path)
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceLine>> {
    read_jsonl(path)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        write_line(&mut w, path, item)?;
    }
    finish(w, path)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|line| Ok(serde_json::from_str(&line.map_err(|e| Error::io(path, e))?)?))
        .collect()
}

/// One results row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub density: String,
    #[serde(rename = "ENS")]
    pub ens: f64,
    #[serde(rename = "NS")]
    pub ns: f64,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "RC")]
    pub rc: f64,
    #[serde(rename = "Infract.")]
    pub infractions: f64,
    #[serde(rename = "Energy")]
    pub energy: f64,
    #[serde(rename = "FPS")]
    pub fps: f64,
    pub episodes: usize,
    pub config_fingerprint: String,
    pub schema_version: u32,
}

impl ReportRow {
    pub fn new(method: &str, density: &str, report: &AggregateReport) -> Self {
        ReportRow {
            method: method.to_string(),
            density: density.to_string(),
            ens: report.ens,
            ns: report.ns,
            sr: report.sr,
            rc: report.rc,
            infractions: report.ic,
            energy: report.energy_per_meter,
            fps: report.fps,
            episodes: report.episodes,
            config_fingerprint: report.fingerprint.clone(),
            schema_version: REPORT_SCHEMA_VERSION,
        }
    }
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let w = create(path)?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(REPORT_HEADER)?;
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::Schema(format!("{} has an unexpected header", path.display())));
    }
    let rows: Vec<ReportRow> = reader.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows)
}

pub const CURVE_HEADER: [&str; 4] = ["checkpoint_index", "mean_reward", "ENS_mean", "ENS_std"];

pub fn write_curve(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let w = create(path)?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(CURVE_HEADER)?;
    for p in points {
        csv.write_record([
            p.checkpoint_index.to_string(),
            p.mean_reward.to_string(),
            p.ens_mean.to_string(),
            p.ens_std.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    if reader.headers()?.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::Schema(format!("{} has an unexpected header", path.display())));
    }
    reader
        .records()
        .map(|r| {
            let r = r?;
            let f = |i: usize| -> Result<f64> {
                r[i].parse().map_err(|_| Error::Schema(format!("bad number {:?}", &r[i])))
            };
            Ok(CurvePoint {
                checkpoint_index: r[0].parse().map_err(|_| Error::Schema(format!("bad index {:?}", &r[0])))?,
                mean_reward: f(1)?,
                ens_mean: f(2)?,
                ens_std: f(3)?,
            })
        })
        .collect()
}

/// Record of what a command produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config_fingerprint: String,
    pub seeds: Vec<u64>,
    /// Checkpoint file name to SHA-256.
    pub checkpoints: BTreeMap<String, String>,
    /// Every file written, relative to the output directory.
    pub artifacts: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config_fingerprint: &str, seeds: Vec<u64>) -> Self {
        Manifest {
            schema_version: CONFIG_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_fingerprint: config_fingerprint.to_string(),
            seeds,
            checkpoints: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub const FILE: &'static str = "manifest.json";

    /// Writes `manifest.json` into `dir`, listing itself among the artifacts.
    pub fn write(mut self, dir: &Path) -> Result<Self> {
        self.artifacts.push(PathBuf::from(Self::FILE));
        let path = dir.join(Self::FILE);
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: f64) -> Sample {
        Sample {
            observation: Observation { rays: vec![x; 4], goal: [0.1, -0.2], speed_norm: 0.3 },
            action: Action::new(0.1, 1.2),
        }
    }

    #[test]
    fn dataset_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let dataset = ImitationDataset {
            samples: vec![sample(0.1), sample(0.2), sample(1.0 / 3.0)],
            seeds: vec![7, 9],
            density: "low".into(),
        };
        let headers = vec![
            EpisodeHeader { index: 0, route: 0, seed: 7, pedestrian_count: 5, samples: 2 },
            EpisodeHeader { index: 1, route: 1, seed: 9, pedestrian_count: 5, samples: 1 },
        ];
        write_dataset(&path, &dataset, &headers, 5, 7, "abc").unwrap();
        let (back, h, width) = read_dataset(&path).unwrap();
        assert_eq!(back, dataset);
        assert_eq!(h, headers);
        assert_eq!(width, 7);
    }

    #[test]
    fn truncated_dataset_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let dataset = ImitationDataset { samples: vec![sample(0.1), sample(0.2)], seeds: vec![1], density: "low".into() };
        let headers = vec![EpisodeHeader { index: 0, route: 0, seed: 1, pedestrian_count: 5, samples: 2 }];
        write_dataset(&path, &dataset, &headers, 5, 7, "abc").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(3).collect();
        std::fs::write(&path, cut.join("\n") + "\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Schema(_))));
    }

    #[test]
    fn report_roundtrip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let row = ReportRow {
            method: "unilcd".into(),
            density: "high".into(),
            ens: 78.25,
            ns: 94.58,
            sr: 90.0,
            rc: 95.9,
            infractions: 0.02,
            energy: 1.0 / 3.0,
            fps: 40.0,
            episodes: 150,
            config_fingerprint: "f".into(),
            schema_version: REPORT_SCHEMA_VERSION,
        };
        write_report(&path, std::slice::from_ref(&row)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "method,density,ENS,NS,SR,RC,Infract.,Energy,FPS,episodes,config_fingerprint,schema_version"
        );
        assert_eq!(read_report(&path).unwrap(), vec![row]);
    }

    #[test]
    fn curve_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let points = vec![
            CurvePoint { checkpoint_index: 50, mean_reward: 1.5, ens_mean: 60.0, ens_std: 2.0 },
            CurvePoint { checkpoint_index: 100, mean_reward: 0.1 + 0.2, ens_mean: 61.0, ens_std: 1.0 },
        ];
        write_curve(&path, &points).unwrap();
        assert_eq!(read_curve(&path).unwrap(), points);
    }
}
