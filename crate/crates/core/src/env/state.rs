use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::{Hash, Hasher};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, OrderSchedule};
use super::event::{DestroyCause, EventKind, GameEvent, MISSED_ORDER_PENALTY, WRONG_SERVE_PENALTY};
use crate::action::AtomicAction;
use crate::hash::Fnv64;
use crate::item::{BeefStatus, Burger, Ingredient, Item, ItemKind, KeyEvent, PlayerId};
use crate::layout::{CellKind, Direction, Layout, Pos};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Player {
    pub pos: Pos,
    pub facing: Direction,
    pub held: Option<Item>,
}

impl Player {
    pub fn facing_cell(&self) -> Option<Pos> {
        self.pos.step(self.facing)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Order {
    pub id: u32,
    pub burger: Burger,
    pub remain_time: u32,
    pub lifetime: u32,
}

impl Order {
    pub fn value(&self) -> i32 {
        self.burger.value()
    }
}

/// The full kitchen world.
#[derive(Debug, Clone)]
pub struct GameState {
    pub layout: Arc<Layout>,
    pub config: Arc<EnvConfig>,
    pub tick: u32,
    pub score: i32,
    /// Item resting on each cell, indexed like `layout.cells`.
    pub slots: Vec<Option<Item>>,
    /// Burning pans, indexed like `layout.cells`.
    pub fires: Vec<bool>,
    pub players: Vec<Player>,
    pub orders: Vec<Order>,
    /// Number of events emitted so far.
    pub event_cursor: u64,
    next_order_id: u32,
    rng: ChaCha8Rng,
}

impl GameState {
    /// Initial state: players on their spawns facing up, one extinguisher per home cell,
    /// and the tick-0 orders.
    pub fn new(layout: Arc<Layout>, config: Arc<EnvConfig>, players: usize) -> GameState {
        assert!(players >= 1 && players <= layout.spawns.len(), "layout lacks spawns for {players} players");
        let n = layout.cells.len();
        let mut slots = vec![None; n];
        for p in layout.cells_of(CellKind::ExtinguisherHome) {
            slots[layout.index(p)] = Some(Item::extinguisher());
        }
        let players = layout.spawns[..players]
            .iter()
            .map(|&pos| Player { pos, facing: Direction::Up, held: None })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut state = GameState {
            layout,
            config,
            tick: 0,
            score: 0,
            slots,
            fires: vec![false; n],
            players,
            orders: Vec::new(),
            event_cursor: 0,
            next_order_id: 0,
            rng,
        };
        let cfg = state.config.clone();
        let events = state.spawn_orders(&cfg.schedule);
        state.event_cursor += events.len() as u64;
        state
    }

    pub fn horizon(&self) -> u32 {
        self.config.horizon
    }

    pub fn is_over(&self) -> bool {
        self.tick >= self.config.horizon
    }

    pub fn remaining_ticks(&self) -> u32 {
        self.config.horizon.saturating_sub(self.tick)
    }

    pub fn slot(&self, pos: Pos) -> Option<&Item> {
        if !self.layout.contains(pos) {
            return None;
        }
        self.slots[self.layout.index(pos)].as_ref()
    }

    pub fn is_burning(&self, pos: Pos) -> bool {
        self.layout.contains(pos) && self.fires[self.layout.index(pos)]
    }

    pub fn any_fire(&self) -> bool {
        self.fires.iter().any(|&f| f)
    }

    pub fn player_at(&self, pos: Pos) -> Option<PlayerId> {
        self.players.iter().position(|p| p.pos == pos)
    }

    /// Digest of everything that influences future dynamics.
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv64::default();
        self.hash(&mut h);
        h.finish()
    }

    /// Advances one tick: movement, interacts in seat order, timers, then new arrivals.
    /// Missing actions are treated as `noop`. Returns every event of the tick.
    pub fn step(&mut self, actions: &[AtomicAction]) -> Vec<GameEvent> {
        if self.is_over() {
            return Vec::new();
        }
        let mut events = Vec::new();
        let action = |i: usize| actions.get(i).copied().unwrap_or_default();
        self.resolve_movement(&action);
        for i in 0..self.players.len() {
            if action(i) == AtomicAction::Interact {
                self.interact(i, &mut events);
            }
        }
        events.extend(self.advance_timers());
        self.tick += 1;
        if !self.is_over() {
            let cfg = self.config.clone();
            events.extend(self.spawn_orders(&cfg.schedule));
        }
        self.event_cursor += events.len() as u64;
        events
    }

    fn resolve_movement(&mut self, action: &dyn Fn(usize) -> AtomicAction) {
        let n = self.players.len();
        let mut target: Vec<Pos> = Vec::with_capacity(n);
        for i in 0..n {
            let p = &mut self.players[i];
            let mut t = p.pos;
            if let Some(dir) = action(i).direction() {
                p.facing = dir;
                if let Some(next) = p.pos.step(dir) {
                    if self.layout.is_floor(next) {
                        t = next;
                    }
                }
            }
            target.push(t);
        }
        // Cancel conflicting moves until stable: shared targets, swaps, or
        // walking into someone who stays put.
        loop {
            let mut changed = false;
            let blocked: Vec<bool> = (0..n)
                .map(|i| {
                    target[i] != self.players[i].pos
                        && (0..n).any(|j| {
                            j != i
                                && (target[j] == target[i]
                                    || (target[i] == self.players[j].pos
                                        && (target[j] == self.players[j].pos || target[j] == self.players[i].pos)))
                        })
                })
                .collect();
            for (i, b) in blocked.into_iter().enumerate() {
                if b {
                    target[i] = self.players[i].pos;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (p, t) in self.players.iter_mut().zip(target) {
            p.pos = t;
        }
    }

    fn interact(&mut self, pi: PlayerId, events: &mut Vec<GameEvent>) {
        let Some(cell) = self.players[pi].facing_cell() else { return };
        if !self.layout.contains(cell) {
            return;
        }
        let tick = self.tick;
        let idx = self.layout.index(cell);
        let kind = self.layout.kind(cell);
        let chop_interacts = self.config.chop_interacts;
        let mut emit = |kind: EventKind| events.push(GameEvent { tick, kind });

        match kind {
            CellKind::BeefStation | CellKind::LettuceStation | CellKind::BreadStation | CellKind::PlateStation => {
                let held = &mut self.players[pi].held;
                match held {
                    None => {
                        let mut item = match kind {
                            CellKind::BeefStation => Item::fresh_beef(),
                            CellKind::LettuceStation => Item::lettuce(),
                            CellKind::BreadStation => Item::bread(),
                            _ => Item::plate(Default::default()),
                        };
                        emit(EventKind::ItemCreated { player: pi, item: item.key(), at: cell });
                        let credit = match kind {
                            CellKind::BreadStation => Some(KeyEvent::UseBread),
                            CellKind::PlateStation => Some(KeyEvent::UsePlate),
                            _ => None,
                        };
                        if let Some(ev) = credit {
                            item.credits.record(ev, pi);
                            emit(EventKind::KeyAction { player: pi, event: ev });
                        }
                        *held = Some(item);
                    }
                    Some(item) if kind == CellKind::BreadStation => {
                        if let ItemKind::Plate(c) = &mut item.kind {
                            if !c.bread {
                                c.bread = true;
                                emit(EventKind::ItemCreated {
                                    player: pi,
                                    item: Item::bread().key(),
                                    at: cell,
                                });
                                if item.credits.record(KeyEvent::UseBread, pi) {
                                    emit(EventKind::KeyAction { player: pi, event: KeyEvent::UseBread });
                                }
                            }
                        }
                    }
                    Some(_) => {}
                }
            }
            CellKind::Counter | CellKind::CenterCounter | CellKind::ExtinguisherHome => {
                let held = self.players[pi].held.take();
                let slot = self.slots[idx].take();
                let (h, s) = match (held, slot) {
                    (None, Some(item)) => (Some(item), None),
                    (Some(item), None) => (None, Some(item)),
                    (Some(h), Some(s)) => combine(h, s, pi, &mut emit),
                    (None, None) => (None, None),
                };
                self.players[pi].held = h;
                self.slots[idx] = s;
            }
            CellKind::Cutboard => {
                let held = self.players[pi].held.take();
                let slot = self.slots[idx].take();
                let (h, s) = match (held, slot) {
                    (None, Some(mut item)) => match &mut item.kind {
                        ItemKind::Lettuce { chopped: false, chops } => {
                            *chops += 1;
                            if *chops >= chop_interacts {
                                item.kind = ItemKind::Lettuce { chopped: true, chops: chop_interacts };
                                if item.credits.record(KeyEvent::PrepareLettuce, pi) {
                                    emit(EventKind::KeyAction { player: pi, event: KeyEvent::PrepareLettuce });
                                }
                            }
                            (None, Some(item))
                        }
                        _ => (Some(item), None),
                    },
                    (Some(item), None) if matches!(item.kind, ItemKind::Lettuce { .. }) => (None, Some(item)),
                    (Some(h), Some(s)) if h.plate_contents().is_some() => combine(h, s, pi, &mut emit),
                    (h, s) => (h, s),
                };
                self.players[pi].held = h;
                self.slots[idx] = s;
            }
            CellKind::Pan => {
                if self.fires[idx] {
                    if matches!(self.players[pi].held.as_ref().map(|i| &i.kind), Some(ItemKind::FireExtinguisher)) {
                        self.fires[idx] = false;
                        if let Some(burnt) = self.slots[idx].take() {
                            emit(EventKind::ItemDestroyed {
                                player: Some(pi),
                                item: burnt.key(),
                                cause: DestroyCause::FireCleanup,
                            });
                        }
                        emit(EventKind::FireExtinguished { pan: cell, player: pi });
                    }
                    return;
                }
                let held = self.players[pi].held.take();
                let slot = self.slots[idx].take();
                let (h, s) = match (held, slot) {
                    (Some(mut item), None) => match item.kind {
                        ItemKind::Beef { status: BeefStatus::Fresh, .. } => {
                            item.kind = ItemKind::Beef { status: BeefStatus::InProgress, elapsed: 0 };
                            if item.credits.record(KeyEvent::CookBeef, pi) {
                                emit(EventKind::KeyAction { player: pi, event: KeyEvent::CookBeef });
                            }
                            (None, Some(item))
                        }
                        ItemKind::Beef { status: BeefStatus::WellCooked, .. } => (None, Some(item)),
                        _ => (Some(item), None),
                    },
                    (None, Some(item))
                        if matches!(item.kind, ItemKind::Beef { status: BeefStatus::WellCooked, .. }) =>
                    {
                        (Some(item), None)
                    }
                    (Some(h), Some(s)) if h.plate_contents().is_some() => combine(h, s, pi, &mut emit),
                    (h, s) => (h, s),
                };
                self.players[pi].held = h;
                self.slots[idx] = s;
            }
            CellKind::Serving => {
                let Some(item) = self.players[pi].held.take() else { return };
                if matches!(item.kind, ItemKind::FireExtinguisher) {
                    self.players[pi].held = Some(item);
                    return;
                }
                let order = item.burger().and_then(|b| {
                    self.orders
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| o.burger == b)
                        .min_by_key(|(_, o)| (o.remain_time, o.id))
                        .map(|(i, _)| i)
                });
                match order {
                    Some(oi) => {
                        let order = self.orders.remove(oi);
                        let mut credits = item.credits;
                        credits.record(KeyEvent::Serve, pi);
                        emit(EventKind::KeyAction { player: pi, event: KeyEvent::Serve });
                        self.score += order.value();
                        emit(EventKind::Delivery {
                            player: pi,
                            burger: order.burger,
                            order_id: order.id,
                            reward: order.value(),
                            credits,
                        });
                    }
                    None => {
                        self.score += WRONG_SERVE_PENALTY;
                        emit(EventKind::WrongServe { player: pi, item: item.key(), reward: WRONG_SERVE_PENALTY });
                    }
                }
            }
            CellKind::Trash => {
                let Some(item) = self.players[pi].held.take() else { return };
                if matches!(item.kind, ItemKind::FireExtinguisher) {
                    self.players[pi].held = Some(item);
                    return;
                }
                emit(EventKind::ItemDestroyed { player: Some(pi), item: item.key(), cause: DestroyCause::Trash });
            }
            CellKind::Floor | CellKind::Wall => {}
        }
    }

    /// Cooking, burning, and order expiry. Called once per tick after actions.
    pub fn advance_timers(&mut self) -> Vec<GameEvent> {
        let mut events = Vec::new();
        let tick = self.tick;
        let (cook, overcook) = (self.config.cook_ticks, self.config.overcook_ticks);
        for i in 0..self.slots.len() {
            if self.layout.cells[i] != CellKind::Pan || self.fires[i] {
                continue;
            }
            let Some(item) = self.slots[i].as_mut() else { continue };
            if let ItemKind::Beef { status, elapsed } = &mut item.kind {
                match status {
                    BeefStatus::InProgress => {
                        *elapsed += 1;
                        if *elapsed >= cook {
                            *status = BeefStatus::WellCooked;
                            *elapsed = 0;
                        }
                    }
                    BeefStatus::WellCooked => {
                        *elapsed += 1;
                        if *elapsed >= overcook {
                            *status = BeefStatus::Overcooked;
                            *elapsed = 0;
                            self.fires[i] = true;
                            events.push(GameEvent { tick, kind: EventKind::FireStarted { pan: self.layout.pos(i) } });
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut kept = Vec::with_capacity(self.orders.len());
        for mut order in core::mem::take(&mut self.orders) {
            order.remain_time = order.remain_time.saturating_sub(1);
            if order.remain_time == 0 {
                self.score += MISSED_ORDER_PENALTY;
                events.push(GameEvent {
                    tick,
                    kind: EventKind::MissedOrder {
                        burger: order.burger,
                        order_id: order.id,
                        reward: MISSED_ORDER_PENALTY,
                    },
                });
            } else {
                kept.push(order);
            }
        }
        self.orders = kept;
        events
    }

    /// Appends the orders arriving at the current tick, respecting the concurrency cap.
    /// Only stochastic schedules draw from the episode RNG.
    pub fn spawn_orders(&mut self, schedule: &OrderSchedule) -> Vec<GameEvent> {
        let mut events = Vec::new();
        match schedule {
            OrderSchedule::Periodic { interval, lifetime, cap, weights, first_tick } => {
                let due = self.tick >= *first_tick && (self.tick - first_tick) % (*interval).max(1) == 0;
                if due && self.orders.len() < *cap {
                    let burger = self.draw_burger(weights);
                    self.push_order(burger, *lifetime, &mut events);
                }
            }
            OrderSchedule::Fixed { arrivals, cap } => {
                let now = self.tick;
                for a in arrivals.iter().filter(|a| a.tick == now) {
                    if self.orders.len() < *cap {
                        self.push_order(a.burger, a.lifetime, &mut events);
                    }
                }
            }
        }
        events
    }

    fn draw_burger(&mut self, weights: &[u32; 3]) -> Burger {
        let total: u64 = weights.iter().map(|&w| w as u64).sum();
        if total == 0 {
            return Burger::ALL[(self.rng.next_u32() % 3) as usize];
        }
        let mut r = self.rng.next_u64() % total;
        for (b, &w) in Burger::ALL.iter().zip(weights) {
            if r < w as u64 {
                return *b;
            }
            r -= w as u64;
        }
        Burger::ALL[2]
    }

    fn push_order(&mut self, burger: Burger, lifetime: u32, events: &mut Vec<GameEvent>) {
        let id = self.next_order_id;
        self.next_order_id += 1;
        let remain_time = lifetime.max(1);
        self.orders.push(Order { id, burger, remain_time, lifetime: remain_time });
        events.push(GameEvent { tick: self.tick, kind: EventKind::OrderPlaced { burger, order_id: id, remain_time } });
    }

    /// Raw component totals `[beef, lettuce, bread, plate, extinguisher]` across the world.
    pub fn component_census(&self) -> [u32; 5] {
        let mut total = [0u32; 5];
        let held = self.players.iter().filter_map(|p| p.held.as_ref());
        for item in self.slots.iter().flatten().chain(held) {
            for (t, c) in total.iter_mut().zip(item.components()) {
                *t += c;
            }
        }
        total
    }
}

/// Stacks a plate and an ingredient held/resting on the same surface. The plate keeps
/// its place; the ingredient is consumed. Anything else leaves both untouched.
fn combine(
    held: Item,
    slot: Item,
    pi: PlayerId,
    emit: &mut dyn FnMut(EventKind),
) -> (Option<Item>, Option<Item>) {
    fn stack(mut plate: Item, ingredient: Item, pi: PlayerId, emit: &mut dyn FnMut(EventKind)) -> Result<Item, (Item, Item)> {
        let (Some(contents), Some(which)) = (plate.plate_contents(), ingredient.as_ingredient()) else {
            return Err((plate, ingredient));
        };
        if contents.has(which) {
            return Err((plate, ingredient));
        }
        plate.kind = ItemKind::Plate(contents.with(which));
        plate.credits.merge(&ingredient.credits);
        let ev = match which {
            Ingredient::Beef => KeyEvent::UseBeef,
            Ingredient::Lettuce => KeyEvent::UseLettuce,
            Ingredient::Bread => KeyEvent::UseBread,
        };
        if plate.credits.record(ev, pi) {
            emit(EventKind::KeyAction { player: pi, event: ev });
        }
        Ok(plate)
    }

    if held.plate_contents().is_some() {
        match stack(held, slot, pi, emit) {
            Ok(plate) => (Some(plate), None),
            Err((h, s)) => (Some(h), Some(s)),
        }
    } else {
        match stack(slot, held, pi, emit) {
            Ok(plate) => (None, Some(plate)),
            Err((s, h)) => (Some(h), Some(s)),
        }
    }
}

impl Hash for GameState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tick.hash(state);
        self.score.hash(state);
        self.slots.hash(state);
        self.fires.hash(state);
        self.players.hash(state);
        self.orders.hash(state);
        self.next_order_id.hash(state);
        self.rng.get_word_pos().hash(state);
    }
}

impl PartialEq for GameState {
    fn eq(&self, other: &Self) -> bool {
        self.tick == other.tick
            && self.score == other.score
            && self.slots == other.slots
            && self.fires == other.fires
            && self.players == other.players
            && self.orders == other.orders
            && self.next_order_id == other.next_order_id
            && self.rng == other.rng
            && *self.layout == *other.layout
            && *self.config == *other.config
    }
}
