//! The assigned-task language: a safe subset of Python lambda expressions used as
//! preconditions, and Python-literal (or JSON) task lists that pair them with macros.
//!
//! The accepted grammar is written down in `GRAMMAR.md` next to this crate.

use alloc::string::String;

use thiserror::Error;

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod tasks;


pub use ast::{Condition, Expr};
pub use eval::{eval_condition, EVAL_BUDGET};
pub use parser::{parse_condition, MAX_DEPTH};
pub use tasks::{parse_action, parse_assigned_tasks, tasks_to_literal, AssignedTask, TaskError};

/// Rejection of a condition's source text. Positions are byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("security error at {pos}: {message}")]
    Security { pos: usize, message: String },
}

impl DslError {
    pub fn parse(pos: usize, message: impl Into<String>) -> Self {
        DslError::Parse { pos, message: message.into() }
    }

    pub fn security(pos: usize, message: impl Into<String>) -> Self {
        DslError::Security { pos, message: message.into() }
    }

    pub fn pos(&self) -> usize {
        match self {
            DslError::Parse { pos, .. } | DslError::Security { pos, .. } => *pos,
        }
    }

    pub fn is_security(&self) -> bool {
        matches!(self, DslError::Security { .. })
    }
}

/// Runtime failure of a well-formed condition: missing key, type mismatch, overflow or
/// an exhausted evaluation budget.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluation error: {message}")]
pub struct EvalError {
    pub message: String,
}
