use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::item::Burger;

/// Timers, horizon and order arrivals of one kitchen episode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Ticks for fresh beef on a pan to become well-cooked.
    pub cook_ticks: u32,
    /// Ticks a well-cooked beef may stay on a pan before it burns.
    pub overcook_ticks: u32,
    /// Interacts needed to chop one lettuce.
    pub chop_interacts: u32,
    pub horizon: u32,
    pub seed: u64,
    pub schedule: OrderSchedule,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            cook_ticks: 40,
            overcook_ticks: 40,
            chop_interacts: 3,
            horizon: 500,
            seed: 0,
            schedule: OrderSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderSchedule {
    /// An order every `interval` ticks starting at `first_tick`, type drawn from `weights`
    /// (LettuceBurger, BeefBurger, BeefLettuceBurger) with the episode RNG.
    Periodic {
        interval: u32,
        lifetime: u32,
        cap: usize,
        weights: [u32; 3],
        first_tick: u32,
    },
    /// Explicit arrivals.
    Fixed { arrivals: Vec<ScheduledOrder>, cap: usize },
}

impl Default for OrderSchedule {
    fn default() -> Self {
        OrderSchedule::Periodic { interval: 60, lifetime: 240, cap: 5, weights: [1, 1, 1], first_tick: 0 }
    }
}

impl OrderSchedule {
    pub fn cap(&self) -> usize {
        match self {
            OrderSchedule::Periodic { cap, .. } | OrderSchedule::Fixed { cap, .. } => *cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduledOrder {
    pub tick: u32,
    pub burger: Burger,
    pub lifetime: u32,
}
