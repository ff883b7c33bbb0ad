//! The tick-driven kitchen: state, transitions, orders, rewards and agent snapshots.

mod config;
mod document;
mod event;
mod state;

pub use config::{EnvConfig, OrderSchedule, ScheduledOrder};
pub use document::{player_key, ObjectCounts, OrderView, StateDocument};
pub use event::{DestroyCause, EventKind, GameEvent, MISSED_ORDER_PENALTY, WRONG_SERVE_PENALTY};
pub use state::{GameState, Order, Player};
