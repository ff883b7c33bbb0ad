//! Agent kinds and their wiring: the fast controller, an optional slow loop, and the
//! scripted rule partners.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{AtomicAction, MacroAction, PassThing};
use crate::dsl::{tasks_to_literal, AssignedTask};
use crate::env::GameState;
use crate::executor::{compile_macro, PlanStatus};
use crate::item::{Burger, Ingredient, ObjectKey, ObjectStatus, PlayerId};
use crate::system1::{demand, supply, DecisionRecord, Options, System1};
use crate::system2::{Framework, JobRequest, PollContext, SlowConfig, SlowLoop, SlowUpdate, TrajectoryEntry};


/// Specialty of a scripted partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleRole {
    Beef,
    Lettuce,
    Assembler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AgentKind {
    /// The controller alone, with no slow loop.
    Fsm,
    Act,
    React,
    Reflexion,
    Dpt,
    DptNoTom,
    Rule(RuleRole),
    /// A seat driven by a person through the game server.
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown agent kind '{0}' (expected fsm, act, react, reflexion, dpt, dpt-no-tom, rule:beef, rule:lettuce, rule:assembler or human)")]
    UnknownKind(String),
    #[error("a human seat has no built-in agent")]
    HumanSeat,
}

impl AgentKind {
    pub fn parse(s: &str) -> Result<AgentKind, ConfigError> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "fsm" | "fsm-only" => AgentKind::Fsm,
            "act" => AgentKind::Act,
            "react" => AgentKind::React,
            "reflexion" => AgentKind::Reflexion,
            "dpt" => AgentKind::Dpt,
            "dpt-no-tom" | "dpt-without-tom" => AgentKind::DptNoTom,
            "rule:beef" => AgentKind::Rule(RuleRole::Beef),
            "rule:lettuce" => AgentKind::Rule(RuleRole::Lettuce),
            "rule:assembler" => AgentKind::Rule(RuleRole::Assembler),
            "human" => AgentKind::Human,
            _ => return Err(ConfigError::UnknownKind(s.to_string())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Fsm => "fsm",
            AgentKind::Act => "act",
            AgentKind::React => "react",
            AgentKind::Reflexion => "reflexion",
            AgentKind::Dpt => "dpt",
            AgentKind::DptNoTom => "dpt-no-tom",
            AgentKind::Rule(RuleRole::Beef) => "rule:beef",
            AgentKind::Rule(RuleRole::Lettuce) => "rule:lettuce",
            AgentKind::Rule(RuleRole::Assembler) => "rule:assembler",
            AgentKind::Human => "human",
        }
    }

    /// The slow-loop pipeline this kind runs, if any.
    pub fn framework(self) -> Option<Framework> {
        match self {
            AgentKind::Act => Some(Framework::Act),
            AgentKind::React => Some(Framework::React),
            AgentKind::Reflexion => Some(Framework::Reflexion),
            AgentKind::Dpt => Some(Framework::Dpt),
            AgentKind::DptNoTom => Some(Framework::DptNoTom),
            _ => None,
        }
    }

    fn controller_options(self) -> Options {
        match self {
            AgentKind::Fsm | AgentKind::Dpt | AgentKind::DptNoTom => Options::default(),
            // Baselines drive the controller only through their own outputs.
            AgentKind::React | AgentKind::Reflexion => Options { default_pipeline: false, fire_override: true },
            AgentKind::Act => Options { default_pipeline: false, fire_override: false },
            AgentKind::Rule(_) | AgentKind::Human => Options { default_pipeline: false, fire_override: true },
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for AgentKind {
    type Error = ConfigError;
    fn try_from(s: String) -> Result<Self, ConfigError> {
        AgentKind::parse(&s)
    }
}

impl From<AgentKind> for String {
    fn from(k: AgentKind) -> String {
        k.as_str().to_string()
    }
}

/// A slow-loop result that changed the controller, for the episode log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "what", rename_all = "kebab-case")]
pub enum Applied {
    Belief { index: u32, text: String },
    Guidelines { index: u32, text: String },
    /// A task list replaced the queue.
    Swap { generation: u64, tasks: String, thought: Option<String> },
    /// A one-shot decision. `None` means the reply held no usable action.
    Decision { action: Option<MacroAction> },
}

/// One seat's agent.
#[derive(Debug, Clone)]
pub struct Agent {
    pub kind: AgentKind,
    pub me: PlayerId,
    pub s1: System1,
    pub slow: Option<SlowLoop>,
}

impl Agent {
    pub fn build(kind: AgentKind, me: PlayerId, slow: SlowConfig) -> Result<Agent, ConfigError> {
        if kind == AgentKind::Human {
            return Err(ConfigError::HumanSeat);
        }
        Ok(Agent {
            kind,
            me,
            s1: System1::with_options(me, kind.controller_options()),
            slow: kind.framework().map(|f| SlowLoop::new(f, slow)),
        })
    }

    pub fn needs_backend(&self) -> bool {
        self.slow.is_some()
    }

    /// Chooses this tick's atomic action.
    pub fn tick(&mut self, state: &GameState) -> (AtomicAction, DecisionRecord) {
        if let AgentKind::Rule(role) = self.kind {
            if self.s1.queue.active.is_none() && !(state.any_fire() && self.s1.options.fire_override) {
                if let Some(m) = rule_partner_step(role, state, self.me) {
                    let _ = self.s1.force(state, m);
                }
            }
        }
        self.s1.tick(state)
    }

    /// What the agent is doing, for history rendering.
    pub fn action_label(&self, atomic: AtomicAction) -> String {
        match &self.s1.queue.active {
            Some(a) => format!("{} ({})", a.action.to_literal(), atomic.as_str()),
            None => atomic.as_str().to_string(),
        }
    }

    /// Records a finished tick and forwards controller diagnostics to the slow loop.
    pub fn observe(&mut self, entry: TrajectoryEntry) {
        let feedback = self.s1.take_feedback();
        if let Some(slow) = &mut self.slow {
            for f in feedback {
                slow.push_feedback(format!("assigned task {} could not be evaluated: {}", f.index, f.message));
            }
            slow.observe(entry);
        }
    }

    /// Slow-loop requests due at this tick.
    pub fn poll(&mut self, tick: u32) -> Vec<JobRequest> {
        let Some(slow) = &mut self.slow else { return Vec::new() };
        let pending: Vec<AssignedTask> = self.s1.queue.pending().map(|(_, t)| t.clone()).collect();
        let tasks = tasks_to_literal(&pending);
        let needs_action = self.kind == AgentKind::Act && self.s1.queue.active.is_none();
        slow.poll(&PollContext { tick, assigned_tasks: &tasks, needs_action })
    }

    /// Applies a slow-loop result between ticks.
    pub fn apply(&mut self, state: &GameState, update: SlowUpdate) -> Applied {
        match update {
            SlowUpdate::Belief(b) => Applied::Belief { index: b.index, text: b.text },
            SlowUpdate::Guidelines(g) => Applied::Guidelines { index: g.index, text: g.text },
            SlowUpdate::Tasks { tasks, thought } => {
                let literal = tasks_to_literal(&tasks);
                self.s1.apply_assigned_tasks(tasks);
                Applied::Swap { generation: self.s1.generation, tasks: literal, thought }
            }
            SlowUpdate::Action(action) => {
                if let Some(m) = action {
                    let _ = self.s1.force(state, m);
                }
                Applied::Decision { action }
            }
        }
    }
}

fn would_run(state: &GameState, me: PlayerId, m: MacroAction) -> bool {
    compile_macro(state, me, m).is_ok_and(|p| p.status == PlanStatus::Active)
}

fn burger_count(state: &GameState, me: PlayerId, b: Burger) -> u32 {
    let doc = state.snapshot_document(me);
    let loose = doc.objects.get(ObjectKey::new(b.object_name(), ObjectStatus::None));
    let held = doc.inventory_other_player.iter().filter(|(_, k)| k.name == b.object_name()).count() as u32;
    loose + held
}

/// The scripted partners' next macro, or `None` to wait.
///
/// Ingredient partners pass finished work to the shared counter and otherwise keep
/// production at most one unit above what pending orders need. The assembler serves
/// finished burgers for pending orders and otherwise assembles the most urgent order
/// it has everything for.
pub fn rule_partner_step(role: RuleRole, state: &GameState, me: PlayerId) -> Option<MacroAction> {
    let ingredient = |food: Ingredient, thing: PassThing| {
        let pass = MacroAction::PassOn { thing };
        if would_run(state, me, pass) {
            return Some(pass);
        }
        let prepare = MacroAction::Prepare { food, plate: false };
        (supply(state, food) < demand(state, food) + 1 && would_run(state, me, prepare)).then_some(prepare)
    };
    match role {
        RuleRole::Beef => ingredient(Ingredient::Beef, PassThing::BeefWellCooked),
        RuleRole::Lettuce => ingredient(Ingredient::Lettuce, PassThing::LettuceChopped),
        RuleRole::Assembler => {
            let mut orders: Vec<_> = state.orders.iter().collect();
            orders.sort_by_key(|o| (o.remain_time, o.id));
            for o in &orders {
                let serve = MacroAction::Serve { food: o.burger };
                if would_run(state, me, serve) {
                    return Some(serve);
                }
            }
            for o in &orders {
                let wanted = state.orders.iter().filter(|p| p.burger == o.burger).count() as u32;
                let assemble = MacroAction::Assemble { food: o.burger };
                if burger_count(state, me, o.burger) < wanted && would_run(state, me, assemble) {
                    return Some(assemble);
                }
            }
            None
        }
    }
}
