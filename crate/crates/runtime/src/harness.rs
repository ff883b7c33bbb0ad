//! Experiment runs: single episodes, seeded batches with aggregation, replay and
//! reports over a directory of logs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dpt_core::log::{replay, setup_fingerprint, EpisodeLog, ReplayError, Verdict};
use dpt_core::metrics::{compute_report, iqm_stderr, Aggregate, MetricsReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::episode::{Episode, EpisodeError, EpisodeResult, RunMode};
use crate::logio::{read_log, LogWriter, ReadError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("no episode logs in {0}")]
    Empty(PathBuf),
}

/// Log file of one run inside the output directory.
pub fn log_path(out: &Path, index: u32, seed: u64) -> PathBuf {
    out.join(format!("run-{index:03}-seed-{seed}.jsonl"))
}

/// Runs one episode with the given seed. The log is streamed to `log_file` if set.
pub fn run_episode(cfg: &ExperimentConfig, seed: u64, log_file: Option<&Path>) -> Result<EpisodeResult, HarnessError> {
    let setup = cfg.setup(seed)?;
    let mut ep = Episode::new(setup)?;
    if let Some(p) = log_file {
        ep = ep.with_writer(LogWriter::create(p)?);
    }
    Ok(ep.run()?)
}

/// One run of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
    /// Report for seat 0. Absent when the run failed.
    pub report: Option<MetricsReport>,
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    /// Shared by every run: configuration with the seed left out.
    pub fingerprint: u64,
    pub agent: String,
    pub layout: String,
    pub runs: Vec<RunSummary>,
    /// IQM and standard error per metric over the successful runs.
    pub aggregates: BTreeMap<String, Aggregate>,
}

impl BatchReport {
    pub fn degraded(&self) -> bool {
        self.runs.iter().any(|r| r.degraded || r.error.is_some())
    }
}

/// Metric values used for aggregation, by name.
pub fn metric_values(r: &MetricsReport) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("score", Some(f64::from(r.score))),
        ("deliveries", Some(f64::from(r.deliveries))),
        ("atom_action_occupy", Some(r.atom_action_occupy)),
        ("failure_missed", Some(f64::from(r.failure_missed))),
        ("failure_wrong_serve", Some(f64::from(r.failure_wrong_serve))),
        ("score_efficiency", Some(r.score_efficiency)),
        ("contribution_rate", r.contribution_rate),
        ("latency_s", r.latency.map(|l| l.mean)),
    ]
}

pub fn aggregate(reports: &[&MetricsReport]) -> BTreeMap<String, Aggregate> {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reports {
        for (name, v) in metric_values(r) {
            if let Some(v) = v {
                columns.entry(name.to_string()).or_default().push(v);
            }
        }
    }
    columns.into_iter().filter_map(|(k, v)| iqm_stderr(&v).map(|a| (k, a))).collect()
}

/// Runs `cfg.runs` episodes with seeds `seed + i`. Fast-mode runs share the
/// available cores; realtime runs go one after another. Failed runs are listed and
/// left out of the aggregates.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchReport, HarnessError> {
    cfg.validate()?;
    let layout = cfg.load_layout()?;
    let seats: Vec<String> = cfg.seats().iter().map(|k| k.as_str().to_string()).collect();
    let fingerprint = setup_fingerprint(&layout.source, &cfg.env_config(0), &seats);
    if let Some(out) = &cfg.out {
        std::fs::create_dir_all(out)?;
    }
    let one = |index: u32| -> RunSummary {
        let seed = cfg.seed.wrapping_add(u64::from(index));
        let log = cfg.out.as_ref().map(|o| log_path(o, index, seed));
        match run_episode(cfg, seed, log.as_deref()) {
            Ok(res) => RunSummary {
                index,
                seed,
                log,
                report: Some(compute_report(&res.log, 0)),
                degraded: res.degraded,
                error: None,
            },
            Err(e) => {
                tracing::error!(index, seed, error = %e, "run failed");
                RunSummary { index, seed, log, report: None, degraded: true, error: Some(e.to_string()) }
            }
        }
    };
    let workers = match cfg.mode {
        RunMode::Realtime => 1,
        RunMode::Fast => std::thread::available_parallelism().map_or(1, |n| n.get()).min(cfg.runs as usize),
    };
    let next = std::sync::atomic::AtomicU32::new(0);
    let mut runs: Vec<RunSummary> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        if i >= cfg.runs {
                            break mine;
                        }
                        mine.push(one(i));
                    }
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("batch worker panicked")).collect()
    });
    runs.sort_by_key(|r| r.index);
    let ok: Vec<&MetricsReport> = runs.iter().filter_map(|r| r.report.as_ref()).collect();
    let report = BatchReport {
        fingerprint,
        agent: seats.join("+"),
        layout: layout.name.clone(),
        aggregates: aggregate(&ok),
        runs,
    };
    if let Some(out) = &cfg.out {
        std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(report)
}

pub fn replay_file(path: &Path) -> Result<Verdict, HarnessError> {
    let log = read_log(path)?;
    Ok(replay(&log)?)
}

/// Logs in `dir`, sorted by file name.
pub fn read_dir_logs(dir: &Path) -> Result<Vec<(PathBuf, EpisodeLog)>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let log = read_log(&p)?;
        out.push((p, log));
    }
    if out.is_empty() {
        return Err(HarnessError::Empty(dir.to_path_buf()));
    }
    Ok(out)
}

/// Per-log reports for seat 0, grouped by seat assignment and layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportGroup {
    pub agent: String,
    pub layout: String,
    pub runs: usize,
    pub aggregates: BTreeMap<String, Aggregate>,
}

pub fn report_dir(dir: &Path) -> Result<Vec<ReportGroup>, HarnessError> {
    let logs = read_dir_logs(dir)?;
    let mut groups: BTreeMap<(String, String), Vec<MetricsReport>> = BTreeMap::new();
    for (_, log) in &logs {
        let key = (log.header.seats.join("+"), log.header.layout.clone());
        groups.entry(key).or_default().push(compute_report(log, 0));
    }
    Ok(groups
        .into_iter()
        .map(|((agent, layout), reports)| {
            let refs: Vec<&MetricsReport> = reports.iter().collect();
            ReportGroup { agent, layout, runs: reports.len(), aggregates: aggregate(&refs) }
        })
        .collect())
}

const COLUMNS: [&str; 8] = [
    "score",
    "deliveries",
    "atom_action_occupy",
    "failure_missed",
    "failure_wrong_serve",
    "score_efficiency",
    "contribution_rate",
    "latency_s",
];

/// Fixed-width text table, one row per group, cells as `iqm ± stderr`.
pub fn format_table(groups: &[ReportGroup]) -> String {
    let mut out = format!("{:<28} {:<26} {:>4}", "agent", "layout", "runs");
    for c in COLUMNS {
        let _ = write!(out, " {c:>22}");
    }
    out.push('\n');
    for g in groups {
        let _ = write!(out, "{:<28} {:<26} {:>4}", g.agent, g.layout, g.runs);
        for c in COLUMNS {
            let cell = g.aggregates.get(c).map_or("-".to_string(), |a| format!("{:.2} ± {:.2}", a.iqm, a.stderr));
            let _ = write!(out, " {cell:>22}");
        }
        out.push('\n');
    }
    out
}

/// CSV with `metric_iqm` and `metric_stderr` columns.
pub fn format_csv(groups: &[ReportGroup]) -> String {
    let mut out = String::from("agent,layout,runs");
    for c in COLUMNS {
        let _ = write!(out, ",{c}_iqm,{c}_stderr");
    }
    out.push('\n');
    for g in groups {
        let _ = write!(out, "{},{},{}", g.agent, g.layout, g.runs);
        for c in COLUMNS {
            match g.aggregates.get(c) {
                Some(a) => {
                    let _ = write!(out, ",{},{}", a.iqm, a.stderr);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}
