//! Episode metrics, run aggregation and rank aggregation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::AtomicAction;
use crate::env::EventKind;
use crate::item::PlayerId;
use crate::log::EpisodeLog;


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean: f64,
    pub stderr: f64,
    pub count: u32,
}

/// Per-seat summary of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub player: PlayerId,
    pub score: i32,
    pub ticks: u32,
    /// Share of ticks with a non-noop action.
    pub atom_action_occupy: f64,
    pub failure_missed: u32,
    pub failure_wrong_serve: u32,
    pub deliveries: u32,
    /// Delivery gains, penalties excluded.
    pub gains: i32,
    /// Macros that ran at least one atomic action.
    pub macros_executed: u32,
    /// Gains per executed macro, 0 without macros.
    pub score_efficiency: f64,
    /// Absent when the seat made no backend calls.
    pub latency: Option<LatencyStats>,
    /// Absent when no served burger carried key events.
    pub contribution_rate: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over the square root of the count, 0 for one value.
fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    libm::sqrt(var) / libm::sqrt(n as f64)
}

pub fn compute_report(log: &EpisodeLog, agent: PlayerId) -> MetricsReport {
    let ticks = log.ticks.len() as u32;
    let active = log
        .ticks
        .iter()
        .filter(|t| t.actions.get(agent).is_some_and(|a| *a != AtomicAction::Noop))
        .count();
    let (mut missed, mut wrong, mut deliveries, mut gains) = (0, 0, 0, 0);
    let (mut mine, mut theirs) = (0u32, 0u32);
    for ev in log.ticks.iter().flat_map(|t| &t.events) {
        match &ev.kind {
            EventKind::MissedOrder { .. } => missed += 1,
            EventKind::WrongServe { .. } => wrong += 1,
            EventKind::Delivery { reward, credits, .. } => {
                deliveries += 1;
                gains += (*reward).max(0);
                for (_, p) in &credits.0 {
                    if *p == agent {
                        mine += 1;
                    } else {
                        theirs += 1;
                    }
                }
            }
            _ => {}
        }
    }
    let macros_executed = log.macros.iter().filter(|m| m.player == agent && m.atomics >= 1).count() as u32;
    let latencies: Vec<f64> = log.calls.iter().filter(|c| c.player == agent).map(|c| c.call.latency_s).collect();
    MetricsReport {
        player: agent,
        score: log.final_score(),
        ticks,
        atom_action_occupy: if ticks == 0 { 0.0 } else { active as f64 / ticks as f64 },
        failure_missed: missed,
        failure_wrong_serve: wrong,
        deliveries,
        gains,
        macros_executed,
        score_efficiency: if macros_executed == 0 { 0.0 } else { gains as f64 / macros_executed as f64 },
        latency: (!latencies.is_empty()).then(|| LatencyStats {
            mean: mean(&latencies),
            stderr: stderr(&latencies),
            count: latencies.len() as u32,
        }),
        contribution_rate: (mine + theirs > 0).then(|| mine as f64 / (mine + theirs) as f64),
    }
}

/// Inter-quartile mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub iqm: f64,
    pub stderr: f64,
    /// Values left after trimming.
    pub retained: u32,
    /// Fewer than four values: a plain mean over all of them.
    pub degraded: bool,
}

/// Drops the lowest and highest quarter (rounded down) and averages the rest. The
/// standard error is the sample deviation of the kept values over the square root of
/// their count. `None` for an empty input.
pub fn iqm_stderr(values: &[f64]) -> Option<Aggregate> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let (kept, degraded) = if n < 4 { (&v[..], true) } else { (&v[n / 4..n - n / 4], false) };
    Some(Aggregate { iqm: mean(kept), stderr: stderr(kept), retained: kept.len() as u32, degraded })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BordaError {
    #[error("ranking {index} is not a permutation of the items in ranking 0")]
    NotPermutation { index: usize },
}

/// Borda points: over `k` items, position `p` (from 0) earns `k - p`.
pub fn borda<T: Ord + Clone>(rankings: &[Vec<T>]) -> Result<BTreeMap<T, u32>, BordaError> {
    let mut scores = BTreeMap::new();
    let Some(first) = rankings.first() else { return Ok(scores) };
    let mut items = first.clone();
    items.sort();
    items.dedup();
    if items.len() != first.len() {
        return Err(BordaError::NotPermutation { index: 0 });
    }
    for it in &items {
        scores.insert(it.clone(), 0);
    }
    let k = items.len() as u32;
    for (index, r) in rankings.iter().enumerate() {
        let mut sorted = r.clone();
        sorted.sort();
        if sorted != items {
            return Err(BordaError::NotPermutation { index });
        }
        for (p, it) in r.iter().enumerate() {
            *scores.get_mut(it).expect("checked permutation") += k - p as u32;
        }
    }
    Ok(scores)
}
