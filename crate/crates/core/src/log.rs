//! Episode logs: one JSON object per line, tagged by `type`. A log opens with a
//! header, carries tick, macro, call and applied records in any order, and closes
//! with an optional footer.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{AtomicAction, MacroAction};
use crate::agents::Applied;
use crate::env::{EnvConfig, GameEvent, GameState};
use crate::layout::Layout;
use crate::hash::digest;
use crate::item::PlayerId;
use crate::metrics::MetricsReport;
use crate::system1::{MacroOutcome, MacroSource};
use crate::system2::CallRecord;

pub const LOG_VERSION: u32 = 1;

/// Everything needed to rebuild the episode's initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub version: u32,
    pub layout: String,
    /// The layout grid, one row per line.
    pub layout_text: String,
    pub config: EnvConfig,
    /// Agent kind per seat.
    pub seats: Vec<String>,
    pub fingerprint: u64,
}

impl EpisodeHeader {
    pub fn new(layout: String, layout_text: String, config: EnvConfig, seats: Vec<String>) -> EpisodeHeader {
        let fingerprint = fingerprint(&layout_text, &config, &seats);
        EpisodeHeader { version: LOG_VERSION, layout, layout_text, config, seats, fingerprint }
    }

    /// Whether the fingerprint still matches the recorded setup.
    pub fn fingerprint_matches(&self) -> bool {
        self.fingerprint == fingerprint(&self.layout_text, &self.config, &self.seats)
    }
}

/// Digest of layout, configuration (seed included) and seat assignment.
pub fn fingerprint(layout_text: &str, config: &EnvConfig, seats: &[String]) -> u64 {
    digest(&(layout_text, config, seats))
}

/// Digest of the configuration with the seed left out, shared by every run of a batch.
pub fn setup_fingerprint(layout_text: &str, config: &EnvConfig, seats: &[String]) -> u64 {
    let mut c = config.clone();
    c.seed = 0;
    fingerprint(layout_text, &c, seats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u32,
    /// One atomic action per seat.
    pub actions: Vec<AtomicAction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<GameEvent>,
    /// Score after the step.
    pub score: i32,
    /// State hash after the step.
    pub hash: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroRecord {
    pub player: PlayerId,
    pub action: MacroAction,
    pub source: MacroSource,
    pub issued_at: u32,
    pub finished_at: u32,
    pub outcome: MacroOutcome,
    pub atomics: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallLog {
    pub player: PlayerId,
    #[serde(flatten)]
    pub call: CallRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedLog {
    pub player: PlayerId,
    /// First tick that ran with the result in place.
    pub tick: u32,
    #[serde(flatten)]
    pub applied: Applied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footer {
    pub final_score: i32,
    pub ticks: u32,
    /// Some backend call failed, timed out or returned unusable output.
    pub degraded: bool,
    pub reports: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LogRecord {
    Header(EpisodeHeader),
    Tick(TickRecord),
    Macro(MacroRecord),
    Call(CallLog),
    Applied(AppliedLog),
    Footer(Footer),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("log has no header")]
    MissingHeader,
    #[error("log has more than one header")]
    DuplicateHeader,
    #[error("tick records out of order at tick {0}")]
    TickOrder(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub ticks: Vec<TickRecord>,
    pub macros: Vec<MacroRecord>,
    pub calls: Vec<CallLog>,
    pub applied: Vec<AppliedLog>,
    pub footer: Option<Footer>,
}

impl EpisodeLog {
    pub fn new(header: EpisodeHeader) -> EpisodeLog {
        EpisodeLog {
            header,
            ticks: Vec::new(),
            macros: Vec::new(),
            calls: Vec::new(),
            applied: Vec::new(),
            footer: None,
        }
    }

    /// Collects records into a log. Tick records must be consecutive from 0.
    pub fn from_records(records: impl IntoIterator<Item = LogRecord>) -> Result<EpisodeLog, LogError> {
        let mut log: Option<EpisodeLog> = None;
        let mut rest = Vec::new();
        for r in records {
            match r {
                LogRecord::Header(h) => {
                    if log.is_some() {
                        return Err(LogError::DuplicateHeader);
                    }
                    log = Some(EpisodeLog::new(h));
                }
                other => rest.push(other),
            }
        }
        let mut log = log.ok_or(LogError::MissingHeader)?;
        for r in rest {
            match r {
                LogRecord::Header(_) => unreachable!("headers were taken above"),
                LogRecord::Tick(t) => {
                    if t.tick as usize != log.ticks.len() {
                        return Err(LogError::TickOrder(t.tick));
                    }
                    log.ticks.push(t);
                }
                LogRecord::Macro(m) => log.macros.push(m),
                LogRecord::Call(c) => log.calls.push(c),
                LogRecord::Applied(a) => log.applied.push(a),
                LogRecord::Footer(f) => log.footer = Some(f),
            }
        }
        Ok(log)
    }

    /// Records in write order: header, then per tick its applied results, the tick
    /// itself, and the macros and calls that ended on it, then the footer.
    pub fn records(&self) -> Vec<LogRecord> {
        let mut out = Vec::new();
        out.push(LogRecord::Header(self.header.clone()));
        let (mut m, mut c, mut a) = (0, 0, 0);
        for t in &self.ticks {
            while a < self.applied.len() && self.applied[a].tick <= t.tick {
                out.push(LogRecord::Applied(self.applied[a].clone()));
                a += 1;
            }
            out.push(LogRecord::Tick(t.clone()));
            while m < self.macros.len() && self.macros[m].finished_at <= t.tick {
                out.push(LogRecord::Macro(self.macros[m].clone()));
                m += 1;
            }
            while c < self.calls.len() && self.calls[c].call.applied_at <= t.tick {
                out.push(LogRecord::Call(self.calls[c].clone()));
                c += 1;
            }
        }
        out.extend(self.applied[a..].iter().cloned().map(LogRecord::Applied));
        out.extend(self.macros[m..].iter().cloned().map(LogRecord::Macro));
        out.extend(self.calls[c..].iter().cloned().map(LogRecord::Call));
        if let Some(f) = &self.footer {
            out.push(LogRecord::Footer(f.clone()));
        }
        out
    }

    pub fn final_score(&self) -> i32 {
        self.ticks.last().map_or(0, |t| t.score)
    }

    /// The atomic action stream of one seat.
    pub fn actions_of(&self, player: PlayerId) -> Vec<AtomicAction> {
        self.ticks.iter().map(|t| t.actions.get(player).copied().unwrap_or(AtomicAction::Noop)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("log fingerprint does not match its header")]
    Fingerprint,
    #[error("log layout does not parse: {0}")]
    Layout(String),
}

/// Outcome of re-simulating a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Verified { ticks: u32, final_score: i32 },
    /// First tick whose recorded outcome differs from the re-simulation.
    Diverged { tick: u32, what: String },
}

impl EpisodeLog {
    /// Initial state described by the header.
    pub fn initial_state(&self) -> Result<GameState, ReplayError> {
        let h = &self.header;
        if !h.fingerprint_matches() {
            return Err(ReplayError::Fingerprint);
        }
        let layout = Layout::parse(&h.layout, &h.layout_text).map_err(|e| ReplayError::Layout(e.to_string()))?;
        Ok(GameState::new(Arc::new(layout), Arc::new(h.config.clone()), h.seats.len()))
    }
}

/// Re-simulates the recorded action streams and compares every tick's events,
/// score and state hash.
pub fn replay(log: &EpisodeLog) -> Result<Verdict, ReplayError> {
    let mut state = log.initial_state()?;
    for t in &log.ticks {
        let diverged = |what: &str| Ok(Verdict::Diverged { tick: t.tick, what: what.to_string() });
        if state.tick != t.tick || state.is_over() {
            return diverged("tick");
        }
        let events = state.step(&t.actions);
        if events != t.events {
            return diverged("events");
        }
        if state.score != t.score {
            return diverged("score");
        }
        if state.state_hash() != t.hash {
            return diverged("hash");
        }
    }
    if let Some(f) = &log.footer {
        if f.final_score != state.score || f.ticks as usize != log.ticks.len() {
            return Ok(Verdict::Diverged { tick: state.tick, what: "footer".to_string() });
        }
    }
    Ok(Verdict::Verified { ticks: log.ticks.len() as u32, final_score: state.score })
}
