//! Runtime for the dual-process kitchen agents: completion backends, the episode
//! loop, experiment harness, log files and the live game server.

pub mod backend;
pub mod config;
pub mod episode;
pub mod frame;
pub mod harness;
pub mod logio;
pub mod server;
