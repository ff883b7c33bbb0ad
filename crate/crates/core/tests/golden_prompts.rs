//! Rendered prompts are pinned by golden files. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;
use std::sync::Arc;

use dpt_core::agents::{Agent, AgentKind};
use dpt_core::system2::prompt::{belief_block, INFERRED_HUMAN_PROMPT};
use dpt_core::system2::{Artifact, Framework, JobKind, PollContext, SlowConfig, SlowLoop, TrajectoryEntry};
use dpt_core::{AtomicAction, EnvConfig, GameState, Layout};

const TICKS: u32 = 80;
const BELIEF: &str = "The human keeps preparing beef and rarely assembles.";
const GUIDELINES: &str = "Keep one plate ready near the serving counter.";
const TASKS: &str = "[\"BeefBurger\"]";

/// Slow loop fed with a fixed controller-only trajectory, holding a belief and
/// guidelines.
fn loaded(framework: Framework) -> SlowLoop {
    let layout = Arc::new(Layout::shipped("new_counter_circuit").unwrap());
    let mut state = GameState::new(layout, Arc::new(EnvConfig { seed: 3, ..EnvConfig::default() }), 2);
    let mut agent = Agent::build(AgentKind::Fsm, 0, SlowConfig::default()).unwrap();
    let mut slow = SlowLoop::new(framework, SlowConfig::default());
    for tick in 0..TICKS {
        let (a, _) = agent.tick(&state);
        let label = agent.action_label(a);
        let events = state.step(&[a, AtomicAction::Noop]);
        slow.observe(TrajectoryEntry::from_step(&state, 0, tick, label, "noop".into(), &events));
    }
    slow.guidelines = Some(Artifact { text: GUIDELINES.into(), index: 1, generated_at: 60, history_end: 60 });
    if framework == Framework::Dpt {
        slow.belief = Some(Artifact { text: BELIEF.into(), index: 1, generated_at: 60, history_end: 60 });
    }
    slow
}

fn render(framework: Framework, kind: JobKind) -> String {
    let ctx = PollContext { tick: TICKS, assigned_tasks: TASKS, needs_action: false };
    let p = loaded(framework).render(kind, &ctx);
    format!("=== system ===\n{}\n=== user ===\n{}", p.system, p.user)
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{} differs from the rendered prompt", path.display());
}

#[test]
fn generator_prompts_match_golden_files() {
    golden("dpt_generate.txt", &render(Framework::Dpt, JobKind::Generate));
    golden("dpt_no_tom_generate.txt", &render(Framework::DptNoTom, JobKind::Generate));
}

#[test]
fn reflection_prompts_match_golden_files() {
    golden("dpt_reflect.txt", &render(Framework::Dpt, JobKind::Reflect));
    golden("dpt_no_tom_reflect.txt", &render(Framework::DptNoTom, JobKind::Reflect));
}

#[test]
fn ablation_removes_exactly_the_belief_section() {
    for kind in [JobKind::Generate, JobKind::Reflect] {
        let with = render(Framework::Dpt, kind);
        let without = render(Framework::DptNoTom, kind);
        assert!(with.contains(INFERRED_HUMAN_PROMPT));
        assert!(with.contains(&belief_block(Some(BELIEF))));
        let stripped = with.replacen(INFERRED_HUMAN_PROMPT, "", 1).replacen(&belief_block(Some(BELIEF)), "", 1);
        assert_eq!(stripped, without, "{kind:?}");
    }
}
