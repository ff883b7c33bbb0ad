//! Render-ready snapshots of the kitchen for live clients.

use dpt_core::item::{BeefStatus, Item, ItemKind};
use dpt_core::layout::Direction;
use dpt_core::{Burger, GameState, PlayerId, Pos};
use serde::{Deserialize, Serialize};

/// Version of every message exchanged with live clients.
pub const PROTOCOL: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub name: String,
    pub status: String,
    /// Cooking, burning or chopping progress in `[0, 1]`, when the item has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    pub id: PlayerId,
    pub pos: [u16; 2],
    pub facing: Direction,
    pub held: Option<ItemView>,
    pub human: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedItem {
    pub pos: [u16; 2],
    pub item: ItemView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderView {
    pub id: u32,
    pub burger: Burger,
    pub remain: u32,
    pub lifetime: u32,
    /// Share of the lifetime still left.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u32,
    pub remaining: u32,
    pub horizon: u32,
    pub score: i32,
    /// One string per row, one layout character per cell.
    pub grid: Vec<String>,
    pub players: Vec<PlayerView>,
    pub items: Vec<PlacedItem>,
    pub fires: Vec<[u16; 2]>,
    pub orders: Vec<OrderView>,
    pub paused: bool,
}

fn xy(p: Pos) -> [u16; 2] {
    [p.x, p.y]
}

fn ratio(n: u32, d: u32) -> f64 {
    if d == 0 {
        1.0
    } else {
        (f64::from(n) / f64::from(d)).min(1.0)
    }
}

pub fn item_view(state: &GameState, item: &Item) -> ItemView {
    let key = item.key();
    let cfg = &state.config;
    let progress = match item.kind {
        ItemKind::Beef { status: BeefStatus::InProgress, elapsed } => Some(ratio(elapsed, cfg.cook_ticks)),
        ItemKind::Beef { status: BeefStatus::WellCooked, elapsed } if elapsed > 0 => {
            Some(ratio(elapsed, cfg.overcook_ticks))
        }
        ItemKind::Lettuce { chopped: false, chops } if chops > 0 => Some(ratio(chops, cfg.chop_interacts)),
        _ => None,
    };
    ItemView { name: key.name.as_str().to_string(), status: key.status.as_str().to_string(), progress }
}

pub fn build_frame(state: &GameState, human_seats: &[PlayerId], paused: bool) -> Frame {
    let layout = &state.layout;
    let grid = (0..layout.height)
        .map(|y| (0..layout.width).map(|x| layout.kind(Pos::new(x, y)).to_char()).collect())
        .collect();
    let players = state
        .players
        .iter()
        .enumerate()
        .map(|(id, p)| PlayerView {
            id,
            pos: xy(p.pos),
            facing: p.facing,
            held: p.held.as_ref().map(|i| item_view(state, i)),
            human: human_seats.contains(&id),
        })
        .collect();
    let items = state
        .slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.as_ref().map(|it| PlacedItem { pos: xy(layout.pos(i)), item: item_view(state, it) }))
        .collect();
    let fires = state.fires.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| xy(layout.pos(i))).collect();
    let orders = state
        .orders
        .iter()
        .map(|o| OrderView {
            id: o.id,
            burger: o.burger,
            remain: o.remain_time,
            lifetime: o.lifetime,
            fraction: ratio(o.remain_time, o.lifetime),
        })
        .collect();
    Frame {
        tick: state.tick,
        remaining: state.remaining_ticks(),
        horizon: state.horizon(),
        score: state.score,
        grid,
        players,
        items,
        fires,
        orders,
        paused,
    }
}
