//! The worked example from the prompt material: a kitchen state and a task list
//! whose condition is false on that state.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::env::{EnvConfig, GameState, Order, OrderSchedule};
use crate::item::{BeefStatus, Burger, Item, ItemKind, PlateContents};
use crate::layout::{CellKind, Layout, Pos};

/// The example task list, as shipped with the prompts.
pub const EXAMPLE_TASKS: &str = crate::system2::prompt::ASSIGNED_TASKS_EXAMPLE;

fn put(state: &mut GameState, pos: Pos, item: Item) {
    let i = state.layout.index(pos);
    state.slots[i] = Some(item);
}

fn order(state: &mut GameState, burger: Burger, remain_time: u32) {
    let id = state.orders.len() as u32 + 100;
    state.orders.push(Order { id, burger, remain_time, lifetime: remain_time });
}

/// The example state, seen from seat 0. Seat 1 holds an empty plate.
pub fn example_state() -> GameState {
    let layout = Arc::new(Layout::parse("example", EXAMPLE_KITCHEN).unwrap());
    let mut s = GameState::new(layout, Arc::new(EnvConfig { schedule: OrderSchedule::Fixed { arrivals: vec![], cap: 5 }, ..EnvConfig::default() }), 2);
    let counters: Vec<Pos> = s.layout.cells_of(CellKind::Counter).collect();
    let pans: Vec<Pos> = s.layout.cells_of(CellKind::Pan).collect();
    let boards: Vec<Pos> = s.layout.cells_of(CellKind::Cutboard).collect();
    put(&mut s, pans[0], Item::new(ItemKind::Beef { status: BeefStatus::InProgress, elapsed: 5 }));
    put(&mut s, pans[1], Item::new(ItemKind::Beef { status: BeefStatus::Overcooked, elapsed: 0 }));
    put(&mut s, boards[0], Item::new(ItemKind::Lettuce { chopped: true, chops: 3 }));
    let mut loose = vec![
        Item::fresh_beef(),
        Item::lettuce(),
        Item::lettuce(),
        Item::lettuce(),
        Item::bread(),
        Item::bread(),
        Item::bread(),
        Item::bread(),
        Item::plate(Burger::LettuceBurger.contents()),
        Item::plate(PlateContents::default()),
        Item::plate(PlateContents::default()),
    ];
    for (pos, item) in counters.iter().zip(loose.drain(..)) {
        put(&mut s, *pos, item);
    }
    s.players[1].held = Some(Item::plate(PlateContents::default()));
    order(&mut s, Burger::BeefBurger, 30);
    order(&mut s, Burger::LettuceBurger, 45);
    s
}

// 29 plain counters, one extinguisher home, two pans (the overcooked one is not
// burning here, matching the example's zero fire count).
const EXAMPLE_KITCHEN: &str = "\
CBCCCCCCCCC
A...CCC...U
C.1.CCC.2.L
A...CCC...D
P.........U
CCCSCCCCCEC
";

