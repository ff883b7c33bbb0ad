//! The slow loop: belief inference about the partner, reflection into guidelines and
//! task-list generation. This module is pure bookkeeping. It decides when a request is
//! due, renders it, and turns completions into updates. Transport and timing live in
//! the runtime crate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::action::MacroAction;
use crate::dsl::AssignedTask;

pub mod extract;
pub mod prompt;
pub mod trajectory;

#[cfg(test)]
mod tests;

pub use extract::{fenced_block, fenced_blocks, parse_act, parse_policy, parse_text, OutputError, PolicyOutput};
pub use prompt::{render_prompt, OutputKind, Prompt, PromptInput};
pub use trajectory::{TrajectoryBuffer, TrajectoryEntry};

/// A stored piece of slow-loop text: a belief about the partner or behavior guidelines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub text: String,
    /// 1 for the first stored artifact, then strictly increasing.
    pub index: u32,
    /// Tick at which the result was applied.
    pub generated_at: u32,
    /// Last history tick the request saw.
    pub history_end: u32,
}

pub type Belief = Artifact;
pub type Guidelines = Artifact;

/// Periods are in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlowConfig {
    pub generate_every: u32,
    pub tom_every: u32,
    pub reflect_every: u32,
    /// Reflect right after a missed order, wrong serve or fire.
    pub reflect_on_failure: bool,
    pub history_capacity: usize,
    /// Rough prompt budget for the history section, in tokens of about four characters.
    pub history_tokens: usize,
}

impl Default for SlowConfig {
    fn default() -> SlowConfig {
        SlowConfig {
            generate_every: 40,
            tom_every: 100,
            reflect_every: 100,
            reflect_on_failure: true,
            history_capacity: 500,
            history_tokens: 3000,
        }
    }
}

/// Which slow-loop pipeline an agent runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    /// One completion per macro decision.
    Act,
    /// Thought plus task list on a fixed period.
    React,
    /// React plus reflection after failures.
    Reflexion,
    /// Belief, guidelines and task lists.
    Dpt,
    /// Dpt without belief inference.
    DptNoTom,
}

impl Framework {
    fn runs(self, job: JobKind) -> bool {
        use Framework::*;
        match job {
            JobKind::Tom => self == Dpt,
            JobKind::Reflect => matches!(self, Dpt | DptNoTom | Reflexion),
            JobKind::Generate => matches!(self, Dpt | DptNoTom | React | Reflexion),
            JobKind::Act => self == Act,
        }
    }

    fn tom(self) -> bool {
        self == Framework::Dpt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Tom,
    Reflect,
    Generate,
    Act,
}

impl JobKind {
    pub const ALL: [JobKind; 4] = [JobKind::Tom, JobKind::Reflect, JobKind::Generate, JobKind::Act];

    fn slot(self) -> usize {
        self as usize
    }
}

/// A rendered request waiting to be sent to a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRequest {
    pub id: u64,
    pub kind: JobKind,
    pub issued_at: u32,
    pub history_end: u32,
    pub prompt: Prompt,
}

/// What came back from a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Reply {
    Text(String),
    Timeout,
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallOutcome {
    Ok,
    Timeout,
    Malformed,
    Error,
}

/// Log entry for one completed backend call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub id: u64,
    pub kind: JobKind,
    pub issued_at: u32,
    pub applied_at: u32,
    pub latency_s: f64,
    pub outcome: CallOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    /// A valid result that lost to a newer one already stored.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub stale: bool,
}

/// A result to apply at the next tick boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlowUpdate {
    Belief(Artifact),
    Guidelines(Artifact),
    Tasks { tasks: Vec<AssignedTask>, thought: Option<String> },
    /// The decision of a one-shot action request. `None` means no usable action.
    Action(Option<MacroAction>),
}

/// What the controller reports when polling for due work.
#[derive(Debug, Clone, Copy)]
pub struct PollContext<'a> {
    pub tick: u32,
    /// Current task list, rendered.
    pub assigned_tasks: &'a str,
    /// The controller has nothing to do and wants an action.
    pub needs_action: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct InFlight {
    id: u64,
    issued_at: u32,
    history_end: u32,
}

/// Slow-loop state for one seat.
#[derive(Debug, Clone)]
pub struct SlowLoop {
    pub framework: Framework,
    pub config: SlowConfig,
    pub history: TrajectoryBuffer,
    pub belief: Option<Belief>,
    pub guidelines: Option<Guidelines>,
    in_flight: [Option<InFlight>; 4],
    failure_pending: bool,
    feedback: Vec<String>,
    next_id: u64,
    /// Requests not issued because the previous one of the same kind was still out.
    pub skipped: u32,
}

impl SlowLoop {
    pub fn new(framework: Framework, config: SlowConfig) -> SlowLoop {
        SlowLoop {
            framework,
            config,
            history: TrajectoryBuffer::new(config.history_capacity),
            belief: None,
            guidelines: None,
            in_flight: [None; 4],
            failure_pending: false,
            feedback: Vec::new(),
            next_id: 1,
            skipped: 0,
        }
    }

    /// Records a finished tick.
    pub fn observe(&mut self, entry: TrajectoryEntry) {
        if entry.has_failure() {
            self.failure_pending = true;
        }
        self.history.push(entry);
    }

    /// Queues a diagnostic for the next generation prompt. Repeats are dropped.
    pub fn push_feedback(&mut self, message: String) {
        if !self.feedback.contains(&message) {
            self.feedback.push(message);
        }
    }

    pub fn pending_feedback(&self) -> &[String] {
        &self.feedback
    }

    pub fn in_flight(&self, kind: JobKind) -> bool {
        self.in_flight[kind.slot()].is_some()
    }

    fn periodic(tick: u32, every: u32) -> bool {
        every > 0 && tick > 0 && tick % every == 0
    }

    fn is_due(&mut self, kind: JobKind, ctx: &PollContext<'_>) -> bool {
        let c = &self.config;
        match kind {
            JobKind::Tom => Self::periodic(ctx.tick, c.tom_every),
            JobKind::Reflect => {
                let triggered = c.reflect_on_failure && core::mem::take(&mut self.failure_pending);
                triggered || (self.framework != Framework::Reflexion && Self::periodic(ctx.tick, c.reflect_every))
            }
            JobKind::Generate => Self::periodic(ctx.tick, c.generate_every),
            JobKind::Act => ctx.needs_action,
        }
    }

    /// Requests due at this tick. A due request whose previous call is still out is
    /// skipped, not queued.
    pub fn poll(&mut self, ctx: &PollContext<'_>) -> Vec<JobRequest> {
        let mut out = Vec::new();
        for kind in JobKind::ALL {
            if !self.framework.runs(kind) || !self.is_due(kind, ctx) {
                continue;
            }
            // Act waits for a new decision point instead of counting skips.
            if self.in_flight(kind) {
                if kind != JobKind::Act {
                    self.skipped += 1;
                }
                continue;
            }
            let Some(history_end) = self.history.last_tick() else { continue };
            let prompt = self.render(kind, ctx);
            if kind == JobKind::Generate {
                self.feedback.clear();
            }
            let id = self.next_id;
            self.next_id += 1;
            self.in_flight[kind.slot()] = Some(InFlight { id, issued_at: ctx.tick, history_end });
            out.push(JobRequest { id, kind, issued_at: ctx.tick, history_end, prompt });
        }
        out
    }

    /// Renders the prompt `kind` would send now.
    pub fn render(&self, kind: JobKind, ctx: &PollContext<'_>) -> Prompt {
        let budget = self.config.history_tokens.saturating_mul(4);
        let from = match kind {
            JobKind::Tom | JobKind::Reflect => 0,
            JobKind::Generate | JobKind::Act => ctx.tick.saturating_sub(self.config.generate_every),
        };
        let history = self.history.render(from, budget);
        let output = match (kind, self.framework) {
            (JobKind::Tom, _) => OutputKind::Tom,
            (JobKind::Reflect, Framework::Reflexion) => OutputKind::Reflexion,
            (JobKind::Reflect, _) => OutputKind::Reflection,
            (JobKind::Generate, Framework::React | Framework::Reflexion) => OutputKind::React,
            (JobKind::Generate, _) => OutputKind::Generator,
            (JobKind::Act, _) => OutputKind::Act,
        };
        let feedback: &[String] = if kind == JobKind::Generate { &self.feedback } else { &[] };
        let input = PromptInput {
            history: &history,
            assigned_tasks: ctx.assigned_tasks,
            guidelines: self.guidelines.as_ref().map(|g| g.text.as_str()),
            tom: self.framework.tom(),
            belief: self.belief.as_ref().map(|b| b.text.as_str()),
            feedback,
        };
        render_prompt(output, &input)
    }

    /// Consumes a reply. Returns `None` for an id that is not in flight.
    pub fn complete(&mut self, id: u64, reply: Reply, latency_s: f64, tick: u32) -> Option<(CallRecord, Option<SlowUpdate>)> {
        let kind = JobKind::ALL.into_iter().find(|k| self.in_flight[k.slot()].is_some_and(|f| f.id == id))?;
        let req = self.in_flight[kind.slot()].take()?;
        let mut rec = CallRecord {
            id,
            kind,
            issued_at: req.issued_at,
            applied_at: tick,
            latency_s,
            outcome: CallOutcome::Ok,
            response: None,
            diagnostic: None,
            stale: false,
        };
        let text = match reply {
            Reply::Text(t) => t,
            Reply::Timeout => {
                rec.outcome = CallOutcome::Timeout;
                return Some((rec, (kind == JobKind::Act).then_some(SlowUpdate::Action(None))));
            }
            Reply::Failed(e) => {
                rec.outcome = CallOutcome::Error;
                rec.diagnostic = Some(e);
                return Some((rec, (kind == JobKind::Act).then_some(SlowUpdate::Action(None))));
            }
        };
        let update = match kind {
            JobKind::Tom | JobKind::Reflect => match parse_text(&text) {
                Ok(t) => {
                    let slot = if kind == JobKind::Tom { &mut self.belief } else { &mut self.guidelines };
                    if slot.as_ref().is_some_and(|a| a.history_end > req.history_end) {
                        rec.stale = true;
                        None
                    } else {
                        let index = slot.as_ref().map_or(1, |a| a.index + 1);
                        let a = Artifact { text: t, index, generated_at: tick, history_end: req.history_end };
                        *slot = Some(a.clone());
                        Some(if kind == JobKind::Tom { SlowUpdate::Belief(a) } else { SlowUpdate::Guidelines(a) })
                    }
                }
                Err(e) => {
                    rec.outcome = CallOutcome::Malformed;
                    rec.diagnostic = Some(e.to_string());
                    None
                }
            },
            JobKind::Generate => match parse_policy(&text) {
                Ok(p) => Some(SlowUpdate::Tasks { tasks: p.tasks, thought: p.thought }),
                Err(e) => {
                    rec.outcome = CallOutcome::Malformed;
                    let msg = e.to_string();
                    self.push_feedback(alloc::format!("Your previous assigned tasks were rejected: {msg}"));
                    rec.diagnostic = Some(msg);
                    None
                }
            },
            JobKind::Act => match parse_act(&text) {
                Ok(a) => Some(SlowUpdate::Action(Some(a))),
                Err(e) => {
                    rec.outcome = CallOutcome::Malformed;
                    rec.diagnostic = Some(e.to_string());
                    Some(SlowUpdate::Action(None))
                }
            },
        };
        rec.response = Some(text);
        Some((rec, update))
    }
}
