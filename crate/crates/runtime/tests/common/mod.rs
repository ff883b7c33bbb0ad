#![allow(dead_code)]

use std::path::PathBuf;

use dpt_core::examples::EXAMPLE_TASKS;
use dpt_runtime::backend::FixtureEntry;

/// Text unique to each slow-loop prompt kind.
pub const GENERATE_HINT: &str = "new assigned tasks that the agent will do urgently";
pub const REFLECT_HINT: &str = "new **Behavior Guidelines** in the following code block";
pub const TOM_HINT: &str = "inference on the human player's behavior pattern**";

pub const BELIEF: &str = "The partner only prepares beef and passes it to the middle counter.";
pub const GUIDELINES: &str = "Assemble beef burgers as soon as cooked beef reaches the middle counter.";

pub fn entry(hint: &str, response: String, latency_s: f64) -> FixtureEntry {
    FixtureEntry { match_hint: Some(hint.to_string()), response, latency_s }
}

/// Belief, guideline and task-list replies, `n` of each, every one taking `latency_s`.
pub fn dpt_fixture(n: usize, latency_s: f64) -> Vec<FixtureEntry> {
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(entry(TOM_HINT, format!("```text\n{BELIEF}\n```"), latency_s));
        out.push(entry(REFLECT_HINT, format!("```text\n{GUIDELINES}\n```"), latency_s));
        out.push(entry(
            GENERATE_HINT,
            format!("```text\nCook beef only when an order needs it.\n```\n\n```json\n{}```", EXAMPLE_TASKS),
            latency_s,
        ));
    }
    out
}

/// Writes a fixture as JSONL and returns its path; the directory lives as long as
/// the returned guard.
pub fn write_fixture(entries: &[FixtureEntry]) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixture.jsonl");
    let text: String = entries.iter().map(|e| serde_json::to_string(e).unwrap() + "\n").collect();
    std::fs::write(&path, text).unwrap();
    (dir, path)
}
