//! Core of a real-time two-seat kitchen coordination engine and its dual-process agent.
//!
//! Everything here is deterministic and free of IO: the kitchen simulation, the A*
//! macro executor, the condition language that policies are written in, the fast
//! finite-state controller, prompt rendering for the slow reasoning loop, rule-based
//! partners, and the metrics computed over episode logs.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod action;
pub mod agents;
pub mod dsl;
pub mod env;
pub mod examples;
pub mod executor;
pub mod hash;
pub mod item;
pub mod layout;
pub mod log;
pub mod metrics;
pub mod path;
pub mod system1;
pub mod system2;

pub use action::{AtomicAction, MacroAction, PassThing};
pub use env::{EnvConfig, GameEvent, GameState, StateDocument};
pub use item::{Burger, Ingredient, PlayerId};
pub use layout::{Layout, Pos};
