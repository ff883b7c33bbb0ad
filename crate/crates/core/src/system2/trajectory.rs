use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::env::{EventKind, GameEvent, GameState, StateDocument};
use crate::item::{Burger, PlayerId};

/// What one seat saw and did during one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    /// Tick at which the actions were taken.
    pub tick: u32,
    /// Ticks left after the step.
    pub remaining: u32,
    /// Score after the step.
    pub score: i32,
    /// Document after the step, from the agent's seat.
    pub doc: StateDocument,
    pub agent_action: String,
    pub human_action: String,
    pub reward_delta: i32,
    pub deliveries: Vec<(Burger, i32)>,
    /// Served items that matched no order, with their penalty.
    pub wrong_serves: Vec<(String, i32)>,
    pub missed: Vec<(Burger, i32)>,
    pub fire_started: bool,
}

impl TrajectoryEntry {
    /// Builds the record for the step that produced `events` and left `after`.
    pub fn from_step(
        after: &GameState,
        viewer: PlayerId,
        tick: u32,
        agent_action: String,
        human_action: String,
        events: &[GameEvent],
    ) -> TrajectoryEntry {
        let mut e = TrajectoryEntry {
            tick,
            remaining: after.remaining_ticks(),
            score: after.score,
            doc: after.snapshot_document(viewer),
            agent_action,
            human_action,
            reward_delta: 0,
            deliveries: Vec::new(),
            wrong_serves: Vec::new(),
            missed: Vec::new(),
            fire_started: false,
        };
        for ev in events {
            e.reward_delta += ev.reward();
            match &ev.kind {
                EventKind::Delivery { burger, reward, .. } => e.deliveries.push((*burger, *reward)),
                EventKind::WrongServe { item, reward, .. } => e.wrong_serves.push((item.to_string(), *reward)),
                EventKind::MissedOrder { burger, reward, .. } => e.missed.push((*burger, *reward)),
                EventKind::FireStarted { .. } => e.fire_started = true,
                _ => {}
            }
        }
        e
    }

    /// Missed order, wrong serve or a fire.
    pub fn has_failure(&self) -> bool {
        self.fire_started || !self.missed.is_empty() || !self.wrong_serves.is_empty()
    }

    fn has_events(&self) -> bool {
        self.has_failure() || !self.deliveries.is_empty() || self.reward_delta != 0
    }

    /// The document with order timers stripped, used to spot scene changes.
    fn shape(&self) -> StateDocument {
        let mut d = self.doc.clone();
        for o in &mut d.orders {
            o.remain_time = 0;
        }
        d
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "Remained Timestep: {}", self.remaining);
        let _ = writeln!(out, "Score: {}", self.score);
        let _ = writeln!(out, "Game State: {}", compact(&self.doc.to_literal()));
        let _ = writeln!(out, "Action: agent {}, human {}", self.agent_action, self.human_action);
        let served: Vec<String> = self
            .deliveries
            .iter()
            .map(|(b, r)| format!("{} ({r:+})", b.as_str()))
            .chain(self.wrong_serves.iter().map(|(k, r)| format!("{k} ({r:+})")))
            .collect();
        let _ = writeln!(out, "Delivery: {}", list_or_none(&served));
        let missed: Vec<String> = self.missed.iter().map(|(b, r)| format!("{} ({r:+})", b.as_str())).collect();
        let _ = write!(out, "Missed Orders: {}", list_or_none(&missed));
    }
}

fn list_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "None".to_string()
    } else {
        items.join(", ")
    }
}

/// Folds a multi-line literal onto one line.
pub fn compact(literal: &str) -> String {
    literal.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

/// Bounded, chronological history of one seat's episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryBuffer {
    capacity: usize,
    entries: VecDeque<TrajectoryEntry>,
}

impl TrajectoryBuffer {
    pub fn new(capacity: usize) -> TrajectoryBuffer {
        TrajectoryBuffer { capacity: capacity.max(1), entries: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends an entry, evicting the oldest when full. Entries older than the
    /// newest one are refused so the buffer stays chronological.
    pub fn push(&mut self, entry: TrajectoryEntry) -> bool {
        if self.entries.back().is_some_and(|b| b.tick >= entry.tick) {
            return false;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl DoubleEndedIterator<Item = &TrajectoryEntry> + ExactSizeIterator {
        self.entries.iter()
    }

    /// Tick of the newest entry.
    pub fn last_tick(&self) -> Option<u32> {
        self.entries.back().map(|e| e.tick)
    }

    /// Renders entries at or after `from` as prompt text of at most `max_chars`.
    ///
    /// A tick becomes a scene when something visible changed: an event, a new item
    /// or order, or a different holding. The newest tick is always a scene. Oldest
    /// scenes are dropped first to fit the budget.
    pub fn render(&self, from: u32, max_chars: usize) -> String {
        let window: Vec<&TrajectoryEntry> = self.entries.iter().filter(|e| e.tick >= from).collect();
        if window.is_empty() {
            return "None".to_string();
        }
        let mut scenes: Vec<String> = Vec::new();
        let mut last_shape: Option<StateDocument> = None;
        for (i, e) in window.iter().enumerate() {
            let shape = e.shape();
            let changed = last_shape.as_ref() != Some(&shape);
            if changed || e.has_events() || i + 1 == window.len() {
                let mut s = String::new();
                e.render(&mut s);
                scenes.push(s);
                last_shape = Some(shape);
            }
        }
        let sep = "\n\n";
        let mut total: usize = scenes.iter().map(String::len).sum::<usize>() + sep.len() * (scenes.len() - 1);
        let mut start = 0;
        while total > max_chars && start + 1 < scenes.len() {
            total -= scenes[start].len() + sep.len();
            start += 1;
        }
        scenes[start..].join(sep)
    }
}
