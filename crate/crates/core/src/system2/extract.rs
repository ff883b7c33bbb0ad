use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::action::MacroAction;
use crate::dsl::{parse_action, parse_assigned_tasks, AssignedTask, TaskError};

/// Why a completion could not be used.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutputError {
    #[error("no ```{0} block in the response")]
    MissingBlock(&'static str),
    #[error("the ```text block is empty")]
    EmptyText,
    #[error("assigned tasks rejected: {0}")]
    Tasks(TaskError),
    #[error("no valid action in the response")]
    NoAction,
}

/// A fenced code block: its info string and body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block<'a> {
    pub lang: &'a str,
    pub body: &'a str,
}

/// All fenced blocks in order. An unterminated block runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let (lang, body_start) = match after.find('\n') {
            Some(nl) => (after[..nl].trim(), &after[nl + 1..]),
            None => (after.trim(), ""),
        };
        match find_fence(body_start) {
            Some(close) => {
                out.push(Block { lang, body: &body_start[..close] });
                rest = &body_start[close + 3..];
            }
            None => {
                out.push(Block { lang, body: body_start });
                break;
            }
        }
    }
    out
}

/// A closing fence: three backticks at the start of a line.
fn find_fence(s: &str) -> Option<usize> {
    if s.starts_with("```") {
        return Some(0);
    }
    s.find("\n```").map(|i| i + 1)
}

/// Body of the first block whose info string is one of `langs` (case-insensitive).
pub fn fenced_block<'a>(text: &'a str, langs: &[&str]) -> Option<&'a str> {
    fenced_blocks(text).into_iter().find(|b| langs.iter().any(|l| b.lang.eq_ignore_ascii_case(l))).map(|b| b.body)
}

/// The trimmed, non-empty body of the first ```text block.
pub fn parse_text(response: &str) -> Result<String, OutputError> {
    let body = fenced_block(response, &["text"]).ok_or(OutputError::MissingBlock("text"))?;
    let body = body.trim();
    if body.is_empty() {
        return Err(OutputError::EmptyText);
    }
    Ok(body.to_string())
}

/// A generator completion: an optional thought and a validated task list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyOutput {
    pub thought: Option<String>,
    pub tasks: Vec<AssignedTask>,
}

const CODE_LANGS: [&str; 3] = ["json", "python", "py"];

/// Reads the thought and the task list out of a generator completion.
pub fn parse_policy(response: &str) -> Result<PolicyOutput, OutputError> {
    let thought = parse_text(response).ok();
    let code = match fenced_block(response, &CODE_LANGS) {
        Some(b) => b,
        None => {
            let t = response.trim();
            if !t.starts_with('[') {
                return Err(OutputError::MissingBlock("json"));
            }
            t
        }
    };
    let tasks = parse_assigned_tasks(code).map_err(OutputError::Tasks)?;
    Ok(PolicyOutput { thought, tasks })
}

/// Reads a single macro action, looking in a code block first and then in the prose.
pub fn parse_act(response: &str) -> Result<MacroAction, OutputError> {
    let mut candidates: Vec<&str> = fenced_blocks(response).into_iter().map(|b| b.body.trim()).collect();
    candidates.push(response.trim());
    for c in candidates {
        if let Ok(a) = parse_action(c) {
            return Ok(a);
        }
        // Prose around a literal: try each opening bracket up to its last closer.
        for (i, ch) in c.char_indices() {
            if ch != '(' && ch != '[' {
                continue;
            }
            let close = if ch == '(' { ')' } else { ']' };
            if let Some(j) = c.rfind(close).filter(|&j| j > i) {
                if let Ok(a) = parse_action(&c[i..=j]) {
                    return Ok(a);
                }
            }
        }
    }
    Err(OutputError::NoAction)
}
