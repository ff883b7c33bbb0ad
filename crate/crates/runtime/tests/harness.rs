mod common;

use std::path::Path;
use std::process::Command;

use dpt_core::agents::{AgentKind, RuleRole};
use dpt_core::log::{setup_fingerprint, Verdict};
use dpt_runtime::backend::BackendSpec;
use dpt_runtime::config::{ConfigError, ExperimentConfig};
use dpt_runtime::episode::RunMode;
use dpt_runtime::harness::{
    format_csv, format_table, log_path, read_dir_logs, replay_file, report_dir, run_batch, HarnessError,
};

fn fsm(runs: u32, horizon: u32) -> ExperimentConfig {
    ExperimentConfig { runs, horizon, ..ExperimentConfig::default() }
}

#[test]
fn toml_configs_fill_in_defaults() {
    let cfg = ExperimentConfig::from_toml(
        r#"
layout = "new_counter_circuit"
agent = "dpt-no-tom"
partner = "rule:beef"
backend = "scripted:fixtures/a.jsonl"
mode = "realtime"
runs = 4
seed = 9

[http]
model = "local"
"#,
    )
    .unwrap();
    assert_eq!(cfg.agent, AgentKind::DptNoTom);
    assert_eq!(cfg.partner, Some(AgentKind::Rule(RuleRole::Beef)));
    assert_eq!(cfg.backend, BackendSpec::Scripted("fixtures/a.jsonl".into()));
    assert_eq!((cfg.mode, cfg.runs, cfg.seed, cfg.horizon), (RunMode::Realtime, 4, 9, 500));
    assert_eq!(cfg.tick_period, 0.25);
    assert_eq!(cfg.http.model, "local");
    assert_eq!(cfg.http.timeout_s, 30.0);
    assert!(cfg.needs_backend());
    assert_eq!(cfg.env_config(9).seed, 9);

    assert!(matches!(ExperimentConfig::from_toml("agnet = \"dpt\""), Err(ConfigError::Toml(_))));
    assert!(matches!(ExperimentConfig::from_toml("agent = \"robot\""), Err(ConfigError::Toml(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig { runs: 0, ..ExperimentConfig::default() },
        ExperimentConfig { horizon: 0, ..ExperimentConfig::default() },
        ExperimentConfig { tick_period: 0.0, ..ExperimentConfig::default() },
        ExperimentConfig { tick_period: f64::NAN, ..ExperimentConfig::default() },
        ExperimentConfig { partner: Some(AgentKind::Human), ..ExperimentConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))), "{cfg:?}");
    }
    let cfg = ExperimentConfig { layout: "no_such_kitchen".into(), ..ExperimentConfig::default() };
    assert!(matches!(cfg.validate(), Err(ConfigError::Layout { .. })));
    assert!(ExperimentConfig::default().validate().is_ok());
}

#[test]
fn layouts_load_from_files_too() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.txt");
    std::fs::write(&path, "CCBCDCC\nA.....U\nE.1.2.T\nCCSCPLC\n").unwrap();
    let cfg = ExperimentConfig { layout: path.display().to_string(), horizon: 30, runs: 1, ..ExperimentConfig::default() };
    cfg.validate().unwrap();
    let layout = cfg.load_layout().unwrap();
    assert_eq!((layout.width, layout.height, layout.spawns.len()), (7, 4, 2));
    let batch = run_batch(&cfg).unwrap();
    assert_eq!(batch.runs[0].report.as_ref().unwrap().ticks, 30);
}

#[test]
fn batches_write_logs_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { seed: 100, out: Some(dir.path().to_path_buf()), ..fsm(20, 200) };
    let batch = run_batch(&cfg).unwrap();
    assert_eq!(batch.runs.len(), 20);
    assert_eq!(batch.agent, "fsm");
    assert_eq!(batch.layout, "new_counter_circuit");
    for (i, r) in batch.runs.iter().enumerate() {
        assert_eq!((r.index as usize, r.seed), (i, 100 + i as u64));
        assert_eq!(r.log.as_deref(), Some(log_path(dir.path(), i as u32, r.seed).as_path()));
        assert!(r.report.is_some() && r.error.is_none() && !r.degraded);
    }
    assert!(!batch.degraded());
    // 20 runs keep the middle 10.
    let score = &batch.aggregates["score"];
    assert_eq!((score.retained, score.degraded), (10, false));

    // Every log shares the batch fingerprint once its seed is set aside.
    let logs = read_dir_logs(dir.path()).unwrap();
    assert_eq!(logs.len(), 20);
    for (_, log) in &logs {
        let h = &log.header;
        assert_eq!(setup_fingerprint(&h.layout_text, &h.config, &h.seats), batch.fingerprint);
    }
    let seeds: std::collections::BTreeSet<u64> = logs.iter().map(|(_, l)| l.header.config.seed).collect();
    assert_eq!(seeds.len(), 20);
    assert!(matches!(replay_file(&logs[3].0).unwrap(), Verdict::Verified { ticks: 200, .. }));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 20);
    assert_eq!(summary["fingerprint"].as_u64(), Some(batch.fingerprint));
}

#[test]
fn single_runs_aggregate_without_trimming() {
    let batch = run_batch(&fsm(1, 100)).unwrap();
    let score = &batch.aggregates["score"];
    assert!(score.degraded);
    assert_eq!(score.retained, 1);
    assert_eq!(score.iqm, f64::from(batch.runs[0].report.as_ref().unwrap().score));
    assert_eq!(score.stderr, 0.0);
}

#[test]
fn failing_backends_mark_the_batch_degraded() {
    let (_dir, path) = common::write_fixture(&[]);
    let cfg = ExperimentConfig { agent: AgentKind::Dpt, backend: BackendSpec::Scripted(path), ..fsm(2, 120) };
    let batch = run_batch(&cfg).unwrap();
    assert!(batch.runs.iter().all(|r| r.degraded && r.report.is_some()));
    assert!(batch.degraded());

    let cfg = ExperimentConfig { agent: AgentKind::Dpt, backend: BackendSpec::Scripted("/no/such/file".into()), ..fsm(2, 50) };
    let batch = run_batch(&cfg).unwrap();
    assert!(batch.runs.iter().all(|r| r.error.is_some() && r.report.is_none()));
    assert!(batch.aggregates.is_empty());
}

fn write_batch(dir: &Path, agent: AgentKind, partner: Option<AgentKind>, runs: u32, seed: u64) {
    let cfg = ExperimentConfig { agent, partner, seed, out: Some(dir.to_path_buf()), ..fsm(runs, 150) };
    run_batch(&cfg).unwrap();
}

#[test]
fn reports_group_logs_by_seats_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    write_batch(dir.path(), AgentKind::Fsm, None, 5, 0);
    write_batch(&dir.path().join("x"), AgentKind::Fsm, Some(AgentKind::Rule(RuleRole::Beef)), 4, 50);
    for entry in std::fs::read_dir(dir.path().join("x")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "jsonl") {
            std::fs::rename(&p, dir.path().join(format!("duo-{}", p.file_name().unwrap().to_string_lossy()))).unwrap();
        }
    }
    let groups = report_dir(dir.path()).unwrap();
    let names: Vec<(&str, usize)> = groups.iter().map(|g| (g.agent.as_str(), g.runs)).collect();
    assert_eq!(names, [("fsm", 5), ("fsm+rule:beef", 4)]);
    assert!(groups.iter().all(|g| g.layout == "new_counter_circuit"));

    let table = format_table(&groups);
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().next().unwrap().contains("score"));
    let csv = format_csv(&groups);
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("agent,layout,runs,"));
    assert_eq!(csv.lines().count(), 3);
    let width = header.split(',').count();
    assert!(csv.lines().all(|l| l.split(',').count() == width));

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(report_dir(empty.path()), Err(HarnessError::Empty(_))));
}

fn dpt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dpt")).args(args).output().unwrap()
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let out_s = out.display().to_string();

    let ok = dpt(&["run", "--runs", "3", "--ticks", "100", "--out", &out_s]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("run ")).count(), 3);
    assert!(text.contains("score"));

    let log = log_path(&out, 1, 1).display().to_string();
    let replayed = dpt(&["replay", "--log", &log]);
    assert_eq!(replayed.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&replayed.stdout).contains("verified"));

    // A log whose actions were edited no longer matches its hashes.
    let text = std::fs::read_to_string(&log).unwrap();
    let edited = text.replacen("\"actions\":[\"up\"]", "\"actions\":[\"down\"]", 1);
    let edited = if edited == text { text.replacen("\"actions\":[\"noop\"]", "\"actions\":[\"up\"]", 1) } else { edited };
    assert_ne!(edited, text);
    std::fs::write(&log, edited).unwrap();
    assert_eq!(dpt(&["replay", "--log", &log]).status.code(), Some(2));

    for format in ["table", "json", "csv"] {
        let r = dpt(&["report", "--dir", &out_s, "--format", format]);
        assert_eq!(r.status.code(), Some(0), "{format}");
        assert!(String::from_utf8_lossy(&r.stdout).contains("fsm"));
    }

    let (_fx, fixture) = common::write_fixture(&[]);
    let spec = format!("scripted:{}", fixture.display());
    let degraded = dpt(&["run", "--agent", "dpt", "--backend", &spec, "--runs", "1", "--ticks", "120"]);
    assert_eq!(degraded.status.code(), Some(2));

    assert_eq!(dpt(&["run", "--agent", "robot"]).status.code(), Some(1));
    assert_eq!(dpt(&["run", "--runs", "0"]).status.code(), Some(1));
    assert_eq!(dpt(&["run", "--agent", "dpt", "--backend", "scripted:/no/such/file"]).status.code(), Some(1));
    assert_eq!(dpt(&["replay", "--log", "/no/such/log.jsonl"]).status.code(), Some(1));

    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "runs = 2\nhorizon = 50\nseed = 4\n").unwrap();
    let from_file = dpt(&["run", "--config", &cfg.display().to_string(), "--seed", "8"]);
    assert_eq!(from_file.status.code(), Some(0));
    let text = String::from_utf8_lossy(&from_file.stdout);
    assert!(text.contains("seed      8") && text.contains("seed      9"), "{text}");
}
