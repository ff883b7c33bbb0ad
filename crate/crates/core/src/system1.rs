//! The fast controller: a finite-state machine that turns the current state and the
//! assigned-task queue into one macro at a time, and the macro into atomic actions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::action::{AtomicAction, MacroAction};
use crate::dsl::{eval_condition, AssignedTask};
use crate::env::{GameState, StateDocument};
use crate::executor::{assembly_shortfall, compile_macro, NextStep, Plan, PlanFailure, PlanStatus};
use crate::item::{BeefStatus, Burger, Ingredient, ItemKind, PlayerId};
use crate::layout::CellKind;

/// Recompilations allowed for one macro before it is given up.
pub const MAX_REPLANS: u32 = 6;

/// Macro decisions attempted within one tick before falling back to a noop.
const DECISIONS_PER_TICK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Follow the order with the least remaining time.
    Default,
    /// Unconsumed assigned tasks are present.
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FsmLabel {
    Idle,
    Executing { action: MacroAction },
    AwaitingCook,
    EmergencyFire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmState {
    pub label: FsmLabel,
    pub entered_at: u32,
}

/// Why a macro was started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MacroSource {
    Fire,
    /// A conditional task fired.
    Task { index: usize, generation: u64 },
    /// A step of an order-goal task.
    Goal { index: usize, generation: u64 },
    /// A step of the default pipeline for an order.
    Default { order_id: u32 },
    /// Issued from outside the queue (rule partners, single-action agents).
    Direct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveMacro {
    pub action: MacroAction,
    pub source: MacroSource,
    pub plan: Plan,
    pub issued_at: u32,
    /// Atomic actions emitted so far, waits included.
    pub atomics: u32,
    pub replans: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedTask {
    pub task: AssignedTask,
    pub consumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskQueue {
    pub tasks: Vec<QueuedTask>,
    pub active: Option<ActiveMacro>,
    pub mode: Mode,
}

impl Default for TaskQueue {
    fn default() -> Self {
        TaskQueue { tasks: Vec::new(), active: None, mode: Mode::Default }
    }
}

impl TaskQueue {
    /// Replaces every pending task at once. The macro in flight is kept.
    pub fn apply_assigned_tasks(&mut self, tasks: Vec<AssignedTask>) {
        self.tasks = tasks.into_iter().map(|task| QueuedTask { task, consumed: false }).collect();
        self.refresh_mode();
    }

    pub fn pending(&self) -> impl Iterator<Item = (usize, &AssignedTask)> {
        self.tasks.iter().enumerate().filter(|(_, t)| !t.consumed).map(|(i, t)| (i, &t.task))
    }

    fn refresh_mode(&mut self) {
        self.mode = if self.tasks.iter().any(|t| !t.consumed) { Mode::Directed } else { Mode::Default };
    }
}

/// Result of one decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Start { action: MacroAction, source: MacroSource },
    Continue(FsmLabel),
}

/// A condition that could not be evaluated; fed back to the slow loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEvalError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "detail", rename_all = "snake_case")]
pub enum MacroOutcome {
    Done,
    Failed(PlanFailure),
    /// Dropped in favor of a preempting macro.
    Abandoned,
    /// Could not be compiled when issued or replanned.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuedMacro {
    pub action: MacroAction,
    #[serde(flatten)]
    pub source: MacroSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinishedMacro {
    pub action: MacroAction,
    pub source: MacroSource,
    #[serde(flatten)]
    pub outcome: MacroOutcome,
    pub issued_at: u32,
    pub atomics: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One line of the decision trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub tick: u32,
    pub fsm: FsmLabel,
    pub mode: Mode,
    pub generation: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issued: Vec<IssuedMacro>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub finished: Vec<FinishedMacro>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eval_errors: Vec<TaskEvalError>,
    pub action: AtomicAction,
}

/// The fast controller for one seat.
#[derive(Debug, Clone)]
pub struct System1 {
    pub me: PlayerId,
    pub queue: TaskQueue,
    pub fsm: FsmState,
    /// Number of task lists applied so far.
    pub generation: u64,
    /// Order the default pipeline is advancing, chosen at the last macro boundary.
    pub pipeline: Option<u32>,
    pub options: Options,
    feedback: Vec<TaskEvalError>,
    /// Direct starts since the last tick, reported with the next record.
    carried_issued: Vec<IssuedMacro>,
    carried_finished: Vec<FinishedMacro>,
}

/// Which built-in behaviors the controller runs on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Options {
    /// Work on the most urgent order when no task is actionable.
    pub default_pipeline: bool,
    /// Drop everything to put out fires.
    pub fire_override: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options { default_pipeline: true, fire_override: true }
    }
}

impl System1 {
    pub fn new(me: PlayerId) -> System1 {
        System1::with_options(me, Options::default())
    }

    pub fn with_options(me: PlayerId, options: Options) -> System1 {
        System1 {
            options,
            me,
            queue: TaskQueue::default(),
            fsm: FsmState { label: FsmLabel::Idle, entered_at: 0 },
            generation: 0,
            pipeline: None,
            feedback: Vec::new(),
            carried_issued: Vec::new(),
            carried_finished: Vec::new(),
        }
    }

    /// Atomic task-list swap, applied between ticks.
    pub fn apply_assigned_tasks(&mut self, tasks: Vec<AssignedTask>) {
        self.queue.apply_assigned_tasks(tasks);
        self.generation += 1;
    }

    /// Condition errors seen since the last call, without repeats.
    pub fn take_feedback(&mut self) -> Vec<TaskEvalError> {
        core::mem::take(&mut self.feedback)
    }

    fn set_label(&mut self, label: FsmLabel, tick: u32) {
        if self.fsm.label != label {
            self.fsm = FsmState { label, entered_at: tick };
        }
    }

    /// Chooses the next macro when none is in flight.
    pub fn decide(&mut self, state: &GameState, doc: &StateDocument, errors: &mut Vec<TaskEvalError>) -> Decision {
        if self.options.fire_override && state.any_fire() && fire_plan(state, self.me).is_some() {
            return Decision::Start { action: MacroAction::PutoutFire, source: MacroSource::Fire };
        }
        let generation = self.generation;
        for i in 0..self.queue.tasks.len() {
            if self.queue.tasks[i].consumed {
                continue;
            }
            match &self.queue.tasks[i].task {
                AssignedTask::Conditional { condition, action } => match eval_condition(condition, doc) {
                    Ok(true) => {
                        let action = *action;
                        self.queue.tasks[i].consumed = true;
                        self.queue.refresh_mode();
                        return Decision::Start { action, source: MacroSource::Task { index: i, generation } };
                    }
                    Ok(false) => {}
                    Err(e) => errors.push(TaskEvalError { index: i, message: e.message }),
                },
                AssignedTask::OrderGoal { name } => {
                    let name = *name;
                    if !state.orders.iter().any(|o| o.burger == name) {
                        // Nothing left to serve it to.
                        self.queue.tasks[i].consumed = true;
                        self.queue.refresh_mode();
                        continue;
                    }
                    return match pipeline_step(state, self.me, name) {
                        Step::Start(action) => {
                            Decision::Start { action, source: MacroSource::Goal { index: i, generation } }
                        }
                        Step::Wait(label) => Decision::Continue(label),
                    };
                }
            }
        }
        if !self.options.default_pipeline {
            return Decision::Continue(FsmLabel::Idle);
        }
        let Some(order) = state.orders.iter().min_by_key(|o| o.remain_time) else {
            self.pipeline = None;
            return Decision::Continue(FsmLabel::Idle);
        };
        self.pipeline = Some(order.id);
        match pipeline_step(state, self.me, order.burger) {
            Step::Start(action) => Decision::Start { action, source: MacroSource::Default { order_id: order.id } },
            Step::Wait(label) => Decision::Continue(label),
        }
    }

    /// Runs one tick of the controller and reports what happened.
    pub fn tick(&mut self, state: &GameState) -> (AtomicAction, DecisionRecord) {
        let doc = state.snapshot_document(self.me);
        let mut rec = DecisionRecord {
            tick: state.tick,
            fsm: self.fsm.label,
            mode: self.queue.mode,
            generation: self.generation,
            issued: core::mem::take(&mut self.carried_issued),
            finished: core::mem::take(&mut self.carried_finished),
            eval_errors: Vec::new(),
            action: AtomicAction::Noop,
        };
        let fighting_fire = matches!(&self.queue.active, Some(a) if a.action == MacroAction::PutoutFire);
        if self.options.fire_override && state.any_fire() && !fighting_fire {
            if let Some(plan) = fire_plan(state, self.me) {
                if let Some(old) = self.queue.active.take() {
                    rec.finished.push(finish(old, MacroOutcome::Abandoned, None));
                }
                self.start(MacroAction::PutoutFire, MacroSource::Fire, plan, state.tick, &mut rec);
            }
        }
        let mut label = FsmLabel::Idle;
        let mut action = AtomicAction::Noop;
        for _ in 0..DECISIONS_PER_TICK {
            if let Some(active) = self.queue.active.as_mut() {
                match active.plan.next_atomic(state, self.me) {
                    NextStep::Act(a) => {
                        active.atomics += 1;
                        action = a;
                        label = if active.action == MacroAction::PutoutFire {
                            FsmLabel::EmergencyFire
                        } else {
                            FsmLabel::Executing { action: active.action }
                        };
                        break;
                    }
                    NextStep::Done => {
                        let done = self.queue.active.take().expect("active macro");
                        self.on_done(&done);
                        rec.finished.push(finish(done, MacroOutcome::Done, None));
                    }
                    NextStep::Failed(why) => {
                        let failed = self.queue.active.take().expect("active macro");
                        rec.finished.push(finish(failed, MacroOutcome::Failed(why), None));
                    }
                    NextStep::Replan => {
                        let (m, over) = (active.action, active.replans >= MAX_REPLANS);
                        match compile_macro(state, self.me, m) {
                            Ok(plan) if !over => {
                                active.plan = plan;
                                active.replans += 1;
                            }
                            Ok(_) => {
                                let a = self.queue.active.take().expect("active macro");
                                rec.finished.push(finish(a, MacroOutcome::Failed(PlanFailure::Stuck), None));
                            }
                            Err(e) => {
                                let a = self.queue.active.take().expect("active macro");
                                rec.finished.push(finish(a, MacroOutcome::Rejected, Some(e.to_string())));
                            }
                        }
                    }
                }
                continue;
            }
            match self.decide(state, &doc, &mut rec.eval_errors) {
                Decision::Start { action: m, source } => match compile_macro(state, self.me, m) {
                    Ok(plan) => self.start(m, source, plan, state.tick, &mut rec),
                    Err(e) => {
                        rec.issued.push(IssuedMacro { action: m, source });
                        rec.finished.push(FinishedMacro {
                            action: m,
                            source,
                            outcome: MacroOutcome::Rejected,
                            issued_at: state.tick,
                            atomics: 0,
                            error: Some(e.to_string()),
                        });
                        break;
                    }
                },
                Decision::Continue(l) => {
                    label = l;
                    break;
                }
            }
        }
        for e in &rec.eval_errors {
            if !self.feedback.contains(e) {
                self.feedback.push(e.clone());
            }
        }
        self.set_label(label, state.tick);
        rec.fsm = self.fsm.label;
        rec.mode = self.queue.mode;
        rec.action = action;
        (action, rec)
    }

    /// Starts `action` directly, replacing whatever is in flight. The start shows up
    /// in the next tick's record, as a rejection if it does not compile.
    pub fn force(&mut self, state: &GameState, action: MacroAction) -> Result<(), crate::executor::CompileError> {
        self.carried_issued.push(IssuedMacro { action, source: MacroSource::Direct });
        match compile_macro(state, self.me, action) {
            Ok(plan) => {
                if let Some(old) = self.queue.active.take() {
                    self.carried_finished.push(finish(old, MacroOutcome::Abandoned, None));
                }
                self.queue.active = Some(ActiveMacro {
                    action,
                    source: MacroSource::Direct,
                    plan,
                    issued_at: state.tick,
                    atomics: 0,
                    replans: 0,
                });
                Ok(())
            }
            Err(e) => {
                self.carried_finished.push(FinishedMacro {
                    action,
                    source: MacroSource::Direct,
                    outcome: MacroOutcome::Rejected,
                    issued_at: state.tick,
                    atomics: 0,
                    error: Some(e.to_string()),
                });
                Err(e)
            }
        }
    }

    fn start(&mut self, action: MacroAction, source: MacroSource, plan: Plan, tick: u32, rec: &mut DecisionRecord) {
        rec.issued.push(IssuedMacro { action, source });
        self.queue.active = Some(ActiveMacro { action, source, plan, issued_at: tick, atomics: 0, replans: 0 });
    }

    fn on_done(&mut self, done: &ActiveMacro) {
        if let (MacroAction::Serve { .. }, MacroSource::Goal { index, generation }) = (done.action, done.source) {
            if generation == self.generation {
                if let Some(t) = self.queue.tasks.get_mut(index) {
                    t.consumed = true;
                }
                self.queue.refresh_mode();
            }
        }
    }
}

fn finish(m: ActiveMacro, outcome: MacroOutcome, error: Option<String>) -> FinishedMacro {
    FinishedMacro { action: m.action, source: m.source, outcome, issued_at: m.issued_at, atomics: m.atomics, error }
}

/// A putout plan that has work to do, if one can be compiled.
fn fire_plan(state: &GameState, me: PlayerId) -> Option<Plan> {
    compile_macro(state, me, MacroAction::PutoutFire).ok().filter(|p| p.status == PlanStatus::Active)
}

enum Step {
    Start(MacroAction),
    Wait(FsmLabel),
}

/// Units of `ingredient` already prepared or underway anywhere, including on plates.
pub fn supply(state: &GameState, ingredient: Ingredient) -> u32 {
    let on_cells = state.slots.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|it| (Some(i), it)));
    let in_hands = state.players.iter().filter_map(|p| p.held.as_ref().map(|it| (None, it)));
    on_cells
        .chain(in_hands)
        .filter(|(cell, item)| match (&item.kind, ingredient) {
            (ItemKind::Beef { status: BeefStatus::InProgress | BeefStatus::WellCooked, .. }, Ingredient::Beef) => {
                !cell.is_some_and(|i| state.fires[i])
            }
            (ItemKind::Lettuce { chopped: true, .. }, Ingredient::Lettuce) => true,
            (ItemKind::Lettuce { chopped: false, .. }, Ingredient::Lettuce) => {
                cell.is_some_and(|i| state.layout.cells[i] == CellKind::Cutboard)
            }
            (ItemKind::Plate(c), ing) => c.has(ing),
            _ => false,
        })
        .count() as u32
}

/// Pending orders whose burger needs `ingredient`.
pub fn demand(state: &GameState, ingredient: Ingredient) -> u32 {
    state.orders.iter().filter(|o| o.burger.needs(ingredient)).count() as u32
}

fn beef_in_progress(state: &GameState) -> bool {
    state.slots.iter().enumerate().any(|(i, s)| {
        !state.fires[i] && matches!(s.as_ref().map(|it| &it.kind), Some(ItemKind::Beef { status: BeefStatus::InProgress, .. }))
    })
}

/// Next macro toward serving `burger`: serve, else assemble, else prepare a missing
/// ingredient that nobody is already making.
fn pipeline_step(state: &GameState, me: PlayerId, burger: Burger) -> Step {
    for m in [MacroAction::Serve { food: burger }, MacroAction::Assemble { food: burger }] {
        if compile_macro(state, me, m).is_ok() {
            return Step::Start(m);
        }
    }
    for ing in assembly_shortfall(state, me, burger) {
        if supply(state, ing) >= demand(state, ing) {
            continue;
        }
        let m = MacroAction::Prepare { food: ing, plate: false };
        if compile_macro(state, me, m).is_ok() {
            return Step::Start(m);
        }
    }
    Step::Wait(if beef_in_progress(state) { FsmLabel::AwaitingCook } else { FsmLabel::Idle })
}

#[cfg(test)]
mod tests;
