//! Turns macro actions into per-tick atomic actions.
//!
//! A [`Plan`] is an ordered list of [`Subgoal`]s. Each subgoal names the kind of
//! cell it needs (a pan that is free, a counter holding chopped lettuce, ...). The
//! concrete cell is chosen lazily, locked for the rest of that subgoal, and
//! re-validated every tick; when the world invalidates it the plan asks for a
//! recompile instead of wandering.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{AtomicAction, MacroAction, PassThing};
use crate::env::GameState;
use crate::item::{BeefStatus, Burger, Ingredient, Item, ItemKind, PlateContents, PlayerId};
use crate::layout::{CellKind, Pos};
use crate::path::{plan_path, PathError, Reach};

/// Ticks spent waiting on a blocking partner before asking for a new plan.
pub const BLOCKED_PATIENCE: u32 = 8;

/// Which items a subgoal is after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemQuery {
    FreshBeef,
    WellCookedBeef,
    UnchoppedLettuce,
    ChoppedLettuce,
    Bread,
    EmptyPlate,
    /// A plate carrying exactly these contents.
    Plated(PlateContents),
    Extinguisher,
    /// Anything but the extinguisher, resting on a plain counter.
    Junk,
}

impl ItemQuery {
    pub fn matches(self, item: &Item) -> bool {
        match (self, &item.kind) {
            (ItemQuery::FreshBeef, ItemKind::Beef { status, .. }) => *status == BeefStatus::Fresh,
            (ItemQuery::WellCookedBeef, ItemKind::Beef { status, .. }) => *status == BeefStatus::WellCooked,
            (ItemQuery::UnchoppedLettuce, ItemKind::Lettuce { chopped, .. }) => !chopped,
            (ItemQuery::ChoppedLettuce, ItemKind::Lettuce { chopped, .. }) => *chopped,
            (ItemQuery::Bread, ItemKind::Bread) => true,
            (ItemQuery::EmptyPlate, ItemKind::Plate(c)) => c.is_empty(),
            (ItemQuery::Plated(want), ItemKind::Plate(c)) => c == &want,
            (ItemQuery::Extinguisher, ItemKind::FireExtinguisher) => true,
            (ItemQuery::Junk, kind) => !matches!(kind, ItemKind::FireExtinguisher),
            _ => false,
        }
    }

    fn station(self) -> Option<CellKind> {
        match self {
            ItemQuery::FreshBeef => Some(CellKind::BeefStation),
            ItemQuery::UnchoppedLettuce => Some(CellKind::LettuceStation),
            ItemQuery::Bread => Some(CellKind::BreadStation),
            ItemQuery::EmptyPlate => Some(CellKind::PlateStation),
            _ => None,
        }
    }

    fn of_thing(thing: PassThing) -> ItemQuery {
        let plated = |b: bool, l: bool, r: bool| ItemQuery::Plated(PlateContents { beef: b, lettuce: l, bread: r });
        match thing {
            PassThing::Plate => ItemQuery::EmptyPlate,
            PassThing::Bread => ItemQuery::Bread,
            PassThing::LettuceChopped => ItemQuery::ChoppedLettuce,
            PassThing::LettuceUnchopped => ItemQuery::UnchoppedLettuce,
            PassThing::BeefWellCooked => ItemQuery::WellCookedBeef,
            PassThing::BeefFresh => ItemQuery::FreshBeef,
            PassThing::BeefLettuce => plated(true, true, false),
            PassThing::BeefBurger => plated(true, false, true),
            PassThing::LettuceBurger => plated(false, true, true),
            PassThing::BeefLettuceBurger => plated(true, true, true),
            PassThing::FireExtinguisher => ItemQuery::Extinguisher,
        }
    }
}

/// Where an item may be fetched from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Loose items first, the dispensing station only when none is reachable.
    Anywhere,
    StationOnly,
    /// Loose items not already on a center counter, then the station.
    OffCenter,
}

/// Where a held item may be put down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spot {
    FreePan,
    FreeCutboard,
    /// Plain counter, falling back to a center counter.
    Counter,
    CenterCounter,
    /// Extinguisher home, falling back to any counter.
    ExtinguisherHome,
    Serving,
    Trash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "goal", rename_all = "kebab-case")]
pub enum Subgoal {
    /// Put down whatever is held unless it already matches `keep`.
    FreeHands { keep: Option<ItemQuery> },
    Fetch { what: ItemQuery, from: Source },
    Place { on: Spot },
    Chop,
    /// Holding a plate, stack this ingredient onto it (waiting on a cooking pan if needed).
    AddToPlate { ingredient: Ingredient },
    Extinguish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanFailure {
    NoTarget,
    Unreachable,
    Stuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum PlanStatus {
    Active,
    Done,
    Failed(PlanFailure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompileError {
    #[error("required ingredient {0:?} is not ready")]
    NotReady(Ingredient),
    #[error("nothing to {0} with")]
    NothingToUse(&'static str),
    #[error("no free {0} in reach")]
    NoFreeCell(&'static str),
    #[error("layout has no {0}")]
    MissingCell(&'static str),
}

/// What the executor wants the player to do this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStep {
    Act(AtomicAction),
    Done,
    /// The locked target no longer fits; compile the macro again.
    Replan,
    Failed(PlanFailure),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub macro_action: MacroAction,
    pub subgoals: Vec<Subgoal>,
    pub cursor: usize,
    pub status: PlanStatus,
    pub target: Option<Pos>,
    interacts: u32,
    blocked: u32,
}

impl Plan {
    fn new(macro_action: MacroAction, subgoals: Vec<Subgoal>) -> Plan {
        let status = if subgoals.is_empty() { PlanStatus::Done } else { PlanStatus::Active };
        Plan { macro_action, subgoals, cursor: 0, status, target: None, interacts: 0, blocked: 0 }
    }

    pub fn current(&self) -> Option<Subgoal> {
        self.subgoals.get(self.cursor).copied()
    }

    fn advance(&mut self) {
        self.cursor += 1;
        self.target = None;
        self.interacts = 0;
        self.blocked = 0;
        if self.cursor >= self.subgoals.len() {
            self.status = PlanStatus::Done;
        }
    }

    fn fail(&mut self, why: PlanFailure) -> NextStep {
        self.status = PlanStatus::Failed(why);
        NextStep::Failed(why)
    }

    /// One atomic action toward the plan, or a terminal signal.
    pub fn next_atomic(&mut self, state: &GameState, me: PlayerId) -> NextStep {
        loop {
            match self.status {
                PlanStatus::Done => return NextStep::Done,
                PlanStatus::Failed(why) => return NextStep::Failed(why),
                PlanStatus::Active => {}
            }
            let goal = self.subgoals[self.cursor];
            if is_done(goal, state, me, self.target) {
                self.advance();
                continue;
            }
            let target = match self.target {
                Some(t) if target_ok(goal, state, me, t) => t,
                Some(_) => return NextStep::Replan,
                None => match choose_target(goal, state, me) {
                    Some(t) => {
                        self.target = Some(t);
                        t
                    }
                    None => return self.fail(PlanFailure::NoTarget),
                },
            };
            let player = &state.players[me];
            let others: Vec<Pos> =
                state.players.iter().enumerate().filter(|(i, _)| *i != me).map(|(_, p)| p.pos).collect();
            return match plan_path(&state.layout, player.pos, player.facing, &[target], &others) {
                Ok(moves) if moves.is_empty() => {
                    self.blocked = 0;
                    if should_wait(goal, state, target) {
                        return NextStep::Act(AtomicAction::Noop);
                    }
                    self.interacts += 1;
                    if self.interacts > state.config.chop_interacts + 2 {
                        return self.fail(PlanFailure::Stuck);
                    }
                    NextStep::Act(AtomicAction::Interact)
                }
                Ok(moves) => {
                    self.blocked = 0;
                    NextStep::Act(moves[0])
                }
                Err(PathError::NoPath) if !others.is_empty() => {
                    if plan_path(&state.layout, player.pos, player.facing, &[target], &[]).is_err() {
                        return self.fail(PlanFailure::Unreachable);
                    }
                    self.blocked += 1;
                    if self.blocked > BLOCKED_PATIENCE {
                        self.blocked = 0;
                        NextStep::Replan
                    } else {
                        NextStep::Act(AtomicAction::Noop)
                    }
                }
                Err(_) => self.fail(PlanFailure::Unreachable),
            };
        }
    }
}

fn held(state: &GameState, me: PlayerId) -> Option<&Item> {
    state.players[me].held.as_ref()
}

fn held_plate(state: &GameState, me: PlayerId) -> Option<PlateContents> {
    held(state, me).and_then(Item::plate_contents)
}

/// Whether an item resting on `pos` can be taken off by hand.
fn pickable(state: &GameState, pos: Pos) -> Option<&Item> {
    let item = state.slot(pos)?;
    let ok = match state.layout.kind(pos) {
        CellKind::Counter | CellKind::CenterCounter | CellKind::ExtinguisherHome => true,
        CellKind::Cutboard => matches!(item.kind, ItemKind::Lettuce { chopped: true, .. }),
        CellKind::Pan => {
            !state.is_burning(pos) && matches!(item.kind, ItemKind::Beef { status: BeefStatus::WellCooked, .. })
        }
        _ => false,
    };
    ok.then_some(item)
}

fn loose_ok(state: &GameState, what: ItemQuery, from: Source, pos: Pos) -> bool {
    if from == Source::StationOnly {
        return false;
    }
    if from == Source::OffCenter && state.layout.kind(pos) == CellKind::CenterCounter {
        return false;
    }
    if what == ItemQuery::Junk && state.layout.kind(pos) != CellKind::Counter {
        return false;
    }
    pickable(state, pos).is_some_and(|i| what.matches(i))
}

fn spot_ok(state: &GameState, spot: Spot, pos: Pos) -> bool {
    let kind = state.layout.kind(pos);
    let empty = state.slot(pos).is_none();
    match spot {
        Spot::FreePan => kind == CellKind::Pan && empty && !state.is_burning(pos),
        Spot::FreeCutboard => kind == CellKind::Cutboard && empty,
        Spot::Counter => matches!(kind, CellKind::Counter | CellKind::CenterCounter) && empty,
        Spot::CenterCounter => kind == CellKind::CenterCounter && empty,
        Spot::ExtinguisherHome => kind.is_counter() && empty,
        Spot::Serving => kind == CellKind::Serving,
        Spot::Trash => kind == CellKind::Trash,
    }
}

fn ingredient_ready(state: &GameState, ingredient: Ingredient, pos: Pos) -> bool {
    if ingredient == Ingredient::Bread && state.layout.kind(pos) == CellKind::BreadStation {
        return true;
    }
    pickable(state, pos).and_then(Item::as_ingredient) == Some(ingredient)
}

fn beef_cooking(state: &GameState, pos: Pos) -> bool {
    state.layout.kind(pos) == CellKind::Pan
        && !state.is_burning(pos)
        && matches!(state.slot(pos).map(|i| &i.kind), Some(ItemKind::Beef { status: BeefStatus::InProgress, .. }))
}

fn unchopped_on_board(state: &GameState, pos: Pos) -> bool {
    state.layout.kind(pos) == CellKind::Cutboard
        && matches!(state.slot(pos).map(|i| &i.kind), Some(ItemKind::Lettuce { chopped: false, .. }))
}

fn is_done(goal: Subgoal, state: &GameState, me: PlayerId, target: Option<Pos>) -> bool {
    let held = held(state, me);
    match goal {
        Subgoal::FreeHands { keep } => held.is_none_or(|i| keep.is_some_and(|q| q.matches(i))),
        Subgoal::Fetch { what, .. } => held.is_some_and(|i| what.matches(i)),
        Subgoal::Place { .. } => held.is_none(),
        Subgoal::Chop => target.is_some_and(|t| {
            state.layout.kind(t) == CellKind::Cutboard
                && matches!(state.slot(t).map(|i| &i.kind), Some(ItemKind::Lettuce { chopped: true, .. }))
        }),
        Subgoal::AddToPlate { ingredient } => held_plate(state, me).is_some_and(|c| c.has(ingredient)),
        Subgoal::Extinguish => match target {
            Some(t) => !state.is_burning(t),
            None => !state.any_fire(),
        },
    }
}

fn target_ok(goal: Subgoal, state: &GameState, me: PlayerId, pos: Pos) -> bool {
    let held = held(state, me);
    match goal {
        Subgoal::FreeHands { .. } => held.is_some() && spot_ok(state, Spot::Counter, pos),
        Subgoal::Fetch { what, from } => {
            held.is_none()
                && (loose_ok(state, what, from, pos) || what.station() == Some(state.layout.kind(pos)))
        }
        Subgoal::Place { on } => held.is_some() && spot_ok(state, on, pos),
        Subgoal::Chop => held.is_none() && unchopped_on_board(state, pos),
        Subgoal::AddToPlate { ingredient } => {
            held_plate(state, me).is_some()
                && (ingredient_ready(state, ingredient, pos)
                    || (ingredient == Ingredient::Beef && beef_cooking(state, pos)))
        }
        Subgoal::Extinguish => {
            state.is_burning(pos) && matches!(held.map(|i| &i.kind), Some(ItemKind::FireExtinguisher))
        }
    }
}

/// Candidate cells for a subgoal, in preference tiers.
fn candidates(goal: Subgoal, state: &GameState) -> Vec<Vec<Pos>> {
    let layout = &state.layout;
    let all = || layout.positions();
    let spots = |spot: Spot| all().filter(|&p| spot_ok(state, spot, p)).collect::<Vec<_>>();
    match goal {
        Subgoal::FreeHands { .. } | Subgoal::Place { on: Spot::Counter } => {
            vec![
                all().filter(|&p| layout.kind(p) == CellKind::Counter && state.slot(p).is_none()).collect(),
                spots(Spot::CenterCounter),
            ]
        }
        Subgoal::Place { on: Spot::ExtinguisherHome } => vec![
            all().filter(|&p| layout.kind(p) == CellKind::ExtinguisherHome && state.slot(p).is_none()).collect(),
            all().filter(|&p| layout.kind(p) == CellKind::Counter && state.slot(p).is_none()).collect(),
            spots(Spot::CenterCounter),
        ],
        Subgoal::Place { on } => vec![spots(on)],
        Subgoal::Fetch { what, from } => {
            let mut tiers = vec![all().filter(|&p| loose_ok(state, what, from, p)).collect::<Vec<_>>()];
            if let Some(kind) = what.station() {
                tiers.push(layout.cells_of(kind).collect());
            }
            tiers
        }
        Subgoal::Chop => vec![all().filter(|&p| unchopped_on_board(state, p)).collect()],
        Subgoal::AddToPlate { ingredient } => {
            let mut tiers = vec![all().filter(|&p| ingredient_ready(state, ingredient, p)).collect::<Vec<_>>()];
            if ingredient == Ingredient::Beef {
                tiers.push(all().filter(|&p| beef_cooking(state, p)).collect());
            }
            tiers
        }
        Subgoal::Extinguish => vec![all().filter(|&p| state.is_burning(p)).collect()],
    }
}

/// Nearest reachable candidate of the first tier that has one; ties go to the lowest
/// cell index. Cells behind another player count as reachable only when nothing else is.
fn choose_target(goal: Subgoal, state: &GameState, me: PlayerId) -> Option<Pos> {
    let player = &state.players[me];
    let others: Vec<Pos> =
        state.players.iter().enumerate().filter(|(i, _)| *i != me).map(|(_, p)| p.pos).collect();
    let tiers = candidates(goal, state);
    for occupied in [&others[..], &[]] {
        let reach = Reach::from(&state.layout, player.pos, player.facing, occupied);
        for tier in &tiers {
            let best = tier.iter().filter_map(|&p| reach.cost(&state.layout, p).map(|c| (c, p))).min();
            if let Some((_, p)) = best {
                return Some(p);
            }
        }
    }
    None
}

fn should_wait(goal: Subgoal, state: &GameState, target: Pos) -> bool {
    matches!(goal, Subgoal::AddToPlate { ingredient: Ingredient::Beef }) && beef_cooking(state, target)
}

/// Existence checks at compile time see the other players where they stand now, the
/// same view the first target choice uses.
fn reachable_any(state: &GameState, me: PlayerId, pred: impl Fn(Pos) -> bool) -> bool {
    let player = &state.players[me];
    let others: Vec<Pos> =
        state.players.iter().enumerate().filter(|(i, _)| *i != me).map(|(_, p)| p.pos).collect();
    let reach = Reach::from(&state.layout, player.pos, player.facing, &others);
    state.layout.positions().any(|p| pred(p) && reach.cost(&state.layout, p).is_some())
}

/// Ingredients `food` still lacks from the point of view of seat `me`: those missing on
/// the fullest usable plate and not ready anywhere within reach. Bread never counts, its
/// station is unlimited.
pub fn assembly_shortfall(state: &GameState, me: PlayerId, food: Burger) -> Vec<Ingredient> {
    let want = food.contents();
    let size = |c: &PlateContents| c.beef as u32 + c.lettuce as u32 + c.bread as u32;
    let held_item = held(state, me);
    let base = state
        .layout
        .positions()
        .filter_map(|p| pickable(state, p).and_then(Item::plate_contents).map(|c| (c, p)))
        .filter(|(c, _)| c.is_subset_of(want))
        .filter(|(_, p)| reachable_any(state, me, |q| q == *p))
        .map(|(c, _)| c)
        .chain(held_plate(state, me).filter(|c| c.is_subset_of(want)))
        .max_by_key(size)
        .unwrap_or_default();
    base.missing_for(food)
        .filter(|&ing| {
            ing != Ingredient::Bread
                && held_item.and_then(Item::as_ingredient) != Some(ing)
                && !reachable_any(state, me, |p| ingredient_ready(state, ing, p))
        })
        .collect()
}

/// Builds the subgoal list for `macro_action` as seen by seat `me`.
pub fn compile_macro(state: &GameState, me: PlayerId, macro_action: MacroAction) -> Result<Plan, CompileError> {
    use Subgoal::*;
    let held = held(state, me);
    let holds = |q: ItemQuery| held.is_some_and(|i| q.matches(i));
    let goals = match macro_action {
        MacroAction::Prepare { food: Ingredient::Beef, plate } => {
            if !reachable_any(state, me, |p| spot_ok(state, Spot::FreePan, p)) {
                return Err(CompileError::NoFreeCell("pan"));
            }
            let mut g = vec![
                FreeHands { keep: Some(ItemQuery::FreshBeef) },
                Fetch { what: ItemQuery::FreshBeef, from: Source::Anywhere },
                Place { on: Spot::FreePan },
            ];
            if plate {
                g.push(Fetch { what: ItemQuery::EmptyPlate, from: Source::Anywhere });
                g.push(AddToPlate { ingredient: Ingredient::Beef });
            }
            g
        }
        MacroAction::Prepare { food: Ingredient::Lettuce, plate } => {
            let mut g = if holds(ItemQuery::UnchoppedLettuce) {
                if !reachable_any(state, me, |p| spot_ok(state, Spot::FreeCutboard, p)) {
                    return Err(CompileError::NoFreeCell("cutboard"));
                }
                vec![Place { on: Spot::FreeCutboard }, Chop]
            } else if reachable_any(state, me, |p| unchopped_on_board(state, p)) {
                vec![FreeHands { keep: None }, Chop]
            } else {
                if !reachable_any(state, me, |p| spot_ok(state, Spot::FreeCutboard, p)) {
                    return Err(CompileError::NoFreeCell("cutboard"));
                }
                vec![
                    FreeHands { keep: Some(ItemQuery::UnchoppedLettuce) },
                    Fetch { what: ItemQuery::UnchoppedLettuce, from: Source::Anywhere },
                    Place { on: Spot::FreeCutboard },
                    Chop,
                ]
            };
            if plate {
                g.push(Fetch { what: ItemQuery::EmptyPlate, from: Source::Anywhere });
                g.push(AddToPlate { ingredient: Ingredient::Lettuce });
            }
            g
        }
        MacroAction::Prepare { food: Ingredient::Bread, plate: false } => vec![
            FreeHands { keep: Some(ItemQuery::Bread) },
            Fetch { what: ItemQuery::Bread, from: Source::StationOnly },
            Place { on: Spot::Counter },
        ],
        MacroAction::Prepare { food: Ingredient::Bread, plate: true } => {
            if held_plate(state, me).is_some_and(|c| !c.bread) {
                vec![AddToPlate { ingredient: Ingredient::Bread }]
            } else {
                vec![
                    FreeHands { keep: Some(ItemQuery::EmptyPlate) },
                    Fetch { what: ItemQuery::EmptyPlate, from: Source::Anywhere },
                    AddToPlate { ingredient: Ingredient::Bread },
                ]
            }
        }
        MacroAction::Assemble { food } => {
            let want = food.contents();
            let size = |c: &PlateContents| c.beef as u32 + c.lettuce as u32 + c.bread as u32;
            let completable = |c: PlateContents| {
                c.missing_for(food).find(|&ing| {
                    !(ing == Ingredient::Bread
                        || held.and_then(Item::as_ingredient) == Some(ing)
                        || reachable_any(state, me, |p| ingredient_ready(state, ing, p)))
                })
            };
            let mut bases: Vec<PlateContents> = state
                .layout
                .positions()
                .filter_map(|p| pickable(state, p).and_then(Item::plate_contents))
                .filter(|c| c.is_subset_of(want))
                .filter(|c| {
                    reachable_any(state, me, |p| pickable(state, p).and_then(Item::plate_contents) == Some(*c))
                })
                .chain(held_plate(state, me).filter(|c| c.is_subset_of(want)))
                .chain([PlateContents::default()])
                .collect();
            bases.sort_by_key(|c| core::cmp::Reverse(size(c)));
            bases.dedup();
            // The held plate wins ties so a half-built burger is never put down.
            if let Some(h) = held_plate(state, me).filter(|c| c.is_subset_of(want)) {
                let top = size(&bases[0]);
                if size(&h) == top {
                    bases.retain(|c| *c != h);
                    bases.insert(0, h);
                }
            }
            let base = match bases.iter().copied().find(|&c| completable(c).is_none()) {
                Some(c) => c,
                None => return Err(CompileError::NotReady(completable(PlateContents::default()).unwrap_or(Ingredient::Beef))),
            };
            let q = if base.is_empty() { ItemQuery::EmptyPlate } else { ItemQuery::Plated(base) };
            let mut g = vec![FreeHands { keep: Some(q) }, Fetch { what: q, from: Source::Anywhere }];
            for ing in base.missing_for(food) {
                g.push(AddToPlate { ingredient: ing });
            }
            g
        }
        MacroAction::Serve { food } => {
            let q = ItemQuery::Plated(food.contents());
            if !holds(q) && !reachable_any(state, me, |p| loose_ok(state, q, Source::Anywhere, p)) {
                return Err(CompileError::NothingToUse("serve"));
            }
            vec![FreeHands { keep: Some(q) }, Fetch { what: q, from: Source::Anywhere }, Place { on: Spot::Serving }]
        }
        MacroAction::PassOn { thing } => {
            let q = ItemQuery::of_thing(thing);
            if state.layout.cells_of(CellKind::CenterCounter).next().is_none() {
                return Err(CompileError::MissingCell("center counter"));
            }
            let available = holds(q)
                || reachable_any(state, me, |p| {
                    loose_ok(state, q, Source::OffCenter, p) || q.station() == Some(state.layout.kind(p))
                });
            if !available {
                return Err(CompileError::NothingToUse("pass on"));
            }
            vec![FreeHands { keep: Some(q) }, Fetch { what: q, from: Source::OffCenter }, Place { on: Spot::CenterCounter }]
        }
        MacroAction::PutoutFire => {
            if !state.any_fire() {
                Vec::new()
            } else {
                vec![
                    FreeHands { keep: Some(ItemQuery::Extinguisher) },
                    Fetch { what: ItemQuery::Extinguisher, from: Source::Anywhere },
                    Extinguish,
                    Place { on: Spot::ExtinguisherHome },
                ]
            }
        }
        MacroAction::CleanACounter => {
            if state.layout.cells_of(CellKind::Trash).next().is_none() {
                return Err(CompileError::MissingCell("trash"));
            }
            if !reachable_any(state, me, |p| loose_ok(state, ItemQuery::Junk, Source::Anywhere, p)) {
                Vec::new()
            } else {
                vec![
                    FreeHands { keep: None },
                    Fetch { what: ItemQuery::Junk, from: Source::Anywhere },
                    Place { on: Spot::Trash },
                ]
            }
        }
    };
    let must_free = goals.first().is_some_and(|g| match g {
        FreeHands { keep } => held.is_some_and(|i| !keep.is_some_and(|q| q.matches(i))),
        _ => false,
    });
    if must_free && !reachable_any(state, me, |p| spot_ok(state, Spot::Counter, p)) {
        return Err(CompileError::NoFreeCell("counter"));
    }
    Ok(Plan::new(macro_action, goals))
}

#[cfg(test)]
mod tests;
