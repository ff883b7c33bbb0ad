use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use proptest::prelude::*;

use super::prompt::*;
use super::*;
use crate::dsl::tests::EXAMPLE_TASKS;
use crate::dsl::parse_assigned_tasks;
use crate::env::tests::example_state;
use crate::item::Burger;

fn entry(tick: u32) -> TrajectoryEntry {
    TrajectoryEntry {
        tick,
        remaining: 499u32.saturating_sub(tick),
        score: 0,
        doc: example_state().snapshot_document(0),
        agent_action: "noop".to_string(),
        human_action: "noop".to_string(),
        reward_delta: 0,
        deliveries: Vec::new(),
        wrong_serves: Vec::new(),
        missed: Vec::new(),
        fire_started: false,
    }
}

fn ctx(tick: u32) -> PollContext<'static> {
    PollContext { tick, assigned_tasks: "[]", needs_action: false }
}

fn fed(framework: Framework, ticks: u32) -> SlowLoop {
    let mut s = SlowLoop::new(framework, SlowConfig::default());
    for t in 0..ticks {
        s.observe(entry(t));
    }
    s
}

fn text_block(body: &str) -> String {
    format!("Here you go.\n```text\n{body}\n```\n")
}

const GENERATION: &str = "```text\nBeef is short for the pending orders.\n```\n\n```json\n[\n    (\n        \"lambda json_state: json_state['objects'][('Beef', 'Well-cooked')] + json_state['objects'][('Beef', 'In-progress')] < sum(order['name'] == 'BeefBurger' or order['name'] == 'BeefLettuceBurger' for order in json_state['orders'])\", (\"prepare\", {\"food\": \"Beef\", \"plate\": False})\n    ),\n    \"BeefBurger\",\n    \"LettuceBurger\"\n]\n```\n";

#[test]
fn buffer_evicts_oldest_and_stays_chronological() {
    let mut b = TrajectoryBuffer::new(3);
    for t in 0..5 {
        assert!(b.push(entry(t)));
    }
    assert_eq!(b.len(), 3);
    assert_eq!(b.entries().map(|e| e.tick).collect::<Vec<_>>(), vec![2, 3, 4]);
    assert!(!b.push(entry(4)));
    assert!(!b.push(entry(1)));
}

#[test]
fn empty_history_renders_none() {
    assert_eq!(TrajectoryBuffer::new(4).render(0, 1000), "None");
}

#[test]
fn unchanged_ticks_collapse_into_the_newest_scene() {
    let mut b = TrajectoryBuffer::new(10);
    for t in 0..5 {
        b.push(entry(t));
    }
    let text = b.render(0, 100_000);
    // First tick opens a scene, the quiet middle is folded, the last closes it.
    assert_eq!(text.matches("Remained Timestep").count(), 2);
    assert!(text.starts_with("Remained Timestep: 499\nScore: 0\nGame State: {"));
    assert!(text.ends_with("Action: agent noop, human noop\nDelivery: None\nMissed Orders: None"));
}

#[test]
fn events_become_scenes() {
    let mut b = TrajectoryBuffer::new(10);
    for t in 0..6 {
        let mut e = entry(t);
        if t == 2 {
            e.deliveries.push((Burger::BeefBurger, 20));
            e.reward_delta = 20;
        }
        if t == 3 {
            e.missed.push((Burger::LettuceBurger, -10));
            e.reward_delta = -10;
        }
        b.push(e);
    }
    let text = b.render(0, 100_000);
    assert_eq!(text.matches("Remained Timestep").count(), 4);
    assert!(text.contains("Delivery: BeefBurger (+20)"));
    assert!(text.contains("Missed Orders: LettuceBurger (-10)"));
}

#[test]
fn budget_drops_oldest_scenes_but_keeps_the_newest() {
    let mut b = TrajectoryBuffer::new(10);
    for t in 0..6 {
        let mut e = entry(t);
        e.deliveries.push((Burger::BeefBurger, 20));
        b.push(e);
    }
    let full = b.render(0, 100_000);
    let tight = b.render(0, 10);
    assert_eq!(tight.matches("Remained Timestep").count(), 1);
    assert!(full.ends_with(&tight));
    assert!(tight.starts_with("Remained Timestep: 494"));
}

#[test]
fn template_assets_have_expected_placeholders() {
    for p in [
        "{MESSAGE_PROMPT}",
        "{INFERRED_HUMAN_PROMPT}",
        "{GAME_STATE_EXAMPLE}",
        "{ASSIGNED_TASKS_EXAMPLE}",
        "{LATEST_MESSAGE_PROMPT}",
        "{FEW_SHOT_EXAMPLE}",
        "{INPUT}",
    ] {
        assert_eq!(INSTRUCTION_TEMPLATE.matches(p).count(), 1, "{p}");
    }
    assert!(GENERATOR_OUTPUT.contains("{MESSAGE_OUTPUT_FORMAT}"));
}

#[test]
fn shipped_examples_match_the_engine() {
    let doc = example_state().snapshot_document(0);
    assert_eq!(GAME_STATE_EXAMPLE.trim_end(), doc.to_literal());
    let tasks = parse_assigned_tasks(ASSIGNED_TASKS_EXAMPLE).unwrap();
    assert_eq!(tasks, parse_assigned_tasks(EXAMPLE_TASKS).unwrap());
}

fn input<'a>(tom: bool, belief: Option<&'a str>, feedback: &'a [String]) -> PromptInput<'a> {
    PromptInput { history: "None", assigned_tasks: "[]", guidelines: None, tom, belief, feedback }
}

#[test]
fn rendered_prompts_leave_no_placeholders() {
    let kinds = [
        OutputKind::Generator,
        OutputKind::Reflection,
        OutputKind::Tom,
        OutputKind::Act,
        OutputKind::React,
        OutputKind::Reflexion,
    ];
    for kind in kinds {
        for tom in [false, true] {
            let p = render_prompt(kind, &input(tom, None, &[]));
            for key in ["{MESSAGE", "{INFERRED", "{GAME_STATE", "{ASSIGNED", "{LATEST", "{FEW_SHOT", "{INPUT}"] {
                assert!(!p.user.contains(key), "{kind:?} {key}");
            }
            assert_eq!(p.system, SYSTEM_PROMPT.trim_end());
            // Every framework shares the same introduction bytes.
            assert!(p.user.starts_with(GAME_PROMPT));
        }
    }
}

#[test]
fn first_call_shows_placeholders_for_missing_artifacts() {
    let p = render_prompt(OutputKind::Generator, &input(true, None, &[]));
    assert!(p.user.contains("**Behavior Guidelines**:\nNone"));
    assert!(p.user.contains("**Inferred Human Behavior**:\nNone"));
}

#[test]
fn without_tom_only_the_belief_sections_disappear() {
    let belief = "The human prefers to chop lettuce.";
    let with = render_prompt(OutputKind::Generator, &input(true, Some(belief), &[])).user;
    let without = render_prompt(OutputKind::Generator, &input(false, None, &[])).user;
    assert!(with.contains(INFERRED_HUMAN_PROMPT));
    assert!(!without.contains("Inferred Human"));
    let stripped = with.replacen(INFERRED_HUMAN_PROMPT, "", 1).replacen(&belief_block(Some(belief)), "", 1);
    assert_eq!(stripped, without);
}

#[test]
fn feedback_is_listed_in_the_input() {
    let fb = vec!["element 0: bad precondition".to_string()];
    let p = render_prompt(OutputKind::Generator, &input(false, None, &fb));
    assert!(p.user.contains("**Feedback**:\n- element 0: bad precondition\n"));
}

#[test]
fn fenced_blocks_are_found_in_order() {
    let blocks = fenced_blocks(GENERATION);
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0].lang, "text");
    assert_eq!(blocks[1].lang, "json");
    assert_eq!(fenced_block("x\n```TEXT\nhi\n```", &["text"]), Some("hi\n"));
    assert_eq!(fenced_block("```text\nopen", &["text"]), Some("open"));
    assert_eq!(fenced_block("no blocks", &["text"]), None);
}

#[test]
fn generator_output_with_example_tasks() {
    let out = parse_policy(GENERATION).unwrap();
    assert_eq!(out.thought.as_deref(), Some("Beef is short for the pending orders."));
    let kinds: Vec<bool> = out.tasks.iter().map(|t| matches!(t, AssignedTask::Conditional { .. })).collect();
    assert_eq!(kinds, vec![true, false, false]);
}

#[test]
fn things_going_well_returns_an_empty_list() {
    let out = parse_policy("```text\nThings are going well\n```\n```json\n[]\n```").unwrap();
    assert_eq!(out.thought.as_deref(), Some("Things are going well"));
    assert!(out.tasks.is_empty());
}

#[test]
fn invalid_lambda_is_rejected() {
    let r = parse_policy("```json\n[(\"lambda s: s.objects\", (\"putout_fire\", {}))]\n```");
    assert!(matches!(r, Err(OutputError::Tasks(_))), "{r:?}");
    assert_eq!(parse_policy("just prose"), Err(OutputError::MissingBlock("json")));
}

#[test]
fn act_output_parsing() {
    assert_eq!(
        parse_act("(\"serve\", {\"food\": \"BeefBurger\"})"),
        Ok(MacroAction::Serve { food: Burger::BeefBurger })
    );
    assert_eq!(
        parse_act("I will serve now: [\"serve\", {\"food\": \"LettuceBurger\"}] as planned."),
        Ok(MacroAction::Serve { food: Burger::LettuceBurger })
    );
    assert_eq!(parse_act("```json\n[\"putout_fire\", {}]\n```"), Ok(MacroAction::PutoutFire));
    assert_eq!(parse_act("Let me think about serving."), Err(OutputError::NoAction));
}

#[test]
fn belief_is_stored_with_increasing_index() {
    let mut s = fed(Framework::Dpt, 100);
    let reqs = s.poll(&ctx(100));
    let tom = reqs.iter().find(|r| r.kind == JobKind::Tom).expect("tom due");
    assert!(tom.prompt.user.contains("**Inferred Human Behavior**:\nNone"));
    let (rec, up) = s.complete(tom.id, Reply::Text(text_block("Likes lettuce.")), 1.5, 104).unwrap();
    assert_eq!(rec.outcome, CallOutcome::Ok);
    assert_eq!(rec.latency_s, 1.5);
    let b = match up {
        Some(SlowUpdate::Belief(b)) => b,
        other => panic!("{other:?}"),
    };
    assert_eq!((b.index, b.text.as_str(), b.generated_at, b.history_end), (1, "Likes lettuce.", 104, 99));
    for t in 100..200 {
        s.observe(entry(t));
    }
    let tom = s.poll(&ctx(200)).into_iter().find(|r| r.kind == JobKind::Tom).unwrap();
    assert!(tom.prompt.user.contains("**Inferred Human Behavior**:\nLikes lettuce."));
    s.complete(tom.id, Reply::Text(text_block("Prefers beef now.")), 0.5, 201).unwrap();
    assert_eq!(s.belief.as_ref().map(|b| b.index), Some(2));
}

#[test]
fn missing_block_keeps_the_previous_belief() {
    let mut s = fed(Framework::Dpt, 100);
    let id = s.poll(&ctx(100)).into_iter().find(|r| r.kind == JobKind::Tom).unwrap().id;
    let (rec, up) = s.complete(id, Reply::Text("no block here".into()), 0.1, 101).unwrap();
    assert_eq!(rec.outcome, CallOutcome::Malformed);
    assert!(up.is_none());
    assert!(s.belief.is_none());
}

#[test]
fn guidelines_follow_reflection() {
    let mut s = fed(Framework::DptNoTom, 100);
    let reqs = s.poll(&ctx(100));
    assert!(reqs.iter().all(|r| r.kind != JobKind::Tom));
    let r = reqs.iter().find(|r| r.kind == JobKind::Reflect).unwrap();
    assert!(r.prompt.user.contains("What leads to the lost of scores"));
    let (_, up) = s.complete(r.id, Reply::Text(text_block("Serve sooner.")), 0.2, 101).unwrap();
    assert!(matches!(up, Some(SlowUpdate::Guidelines(ref g)) if g.index == 1));
    let gen = s.render(JobKind::Generate, &ctx(120));
    assert!(gen.user.contains("**Behavior Guidelines**:\nServe sooner."));
}

#[test]
fn stale_results_are_discarded() {
    let mut s = fed(Framework::Dpt, 100);
    s.belief = Some(Artifact { text: "newer".into(), index: 3, generated_at: 150, history_end: 150 });
    let id = s.poll(&ctx(100)).into_iter().find(|r| r.kind == JobKind::Tom).unwrap().id;
    let (rec, up) = s.complete(id, Reply::Text(text_block("older")), 0.1, 151).unwrap();
    assert!(rec.stale);
    assert!(up.is_none());
    assert_eq!(s.belief.as_ref().unwrap().text, "newer");
}

#[test]
fn overlapping_generation_is_skipped_not_queued() {
    let mut s = fed(Framework::Dpt, 40);
    let first = s.poll(&ctx(40));
    assert_eq!(first.iter().filter(|r| r.kind == JobKind::Generate).count(), 1);
    for t in 40..80 {
        s.observe(entry(t));
    }
    assert!(s.poll(&ctx(80)).iter().all(|r| r.kind != JobKind::Generate));
    assert_eq!(s.skipped, 1);
    let id = first[0].id;
    s.complete(id, Reply::Text(GENERATION.into()), 50.0, 81).unwrap();
    // The skipped trigger is not replayed once the call returns.
    assert!(s.poll(&ctx(81)).is_empty());
}

#[test]
fn failure_triggers_reflection_on_the_next_poll() {
    let mut s = fed(Framework::Dpt, 10);
    assert!(s.poll(&ctx(10)).is_empty());
    let mut e = entry(10);
    e.fire_started = true;
    s.observe(e);
    let reqs = s.poll(&ctx(11));
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].kind, JobKind::Reflect);
    assert!(reqs[0].prompt.user.contains("Remained Timestep: 489"));
}

#[test]
fn reflexion_reflects_only_after_failures() {
    let mut s = fed(Framework::Reflexion, 100);
    let reqs = s.poll(&ctx(100));
    assert!(reqs.iter().all(|r| r.kind != JobKind::Reflect));
    let mut e = entry(100);
    e.missed.push((Burger::BeefBurger, -10));
    s.observe(e);
    let r = s.poll(&ctx(101)).into_iter().find(|r| r.kind == JobKind::Reflect).unwrap();
    assert!(r.prompt.user.contains("1)Fire, 2)Missing Order"));
}

#[test]
fn rejected_tasks_feed_the_next_prompt() {
    let mut s = fed(Framework::Dpt, 40);
    let id = s.poll(&ctx(40))[0].id;
    let (rec, up) = s.complete(id, Reply::Text("```json\n[(\"lambda s: s.x\", \"serve\")]\n```".into()), 0.1, 41).unwrap();
    assert_eq!(rec.outcome, CallOutcome::Malformed);
    assert!(up.is_none());
    for t in 40..80 {
        s.observe(entry(t));
    }
    let next = s.poll(&ctx(80)).into_iter().find(|r| r.kind == JobKind::Generate).unwrap();
    assert!(next.prompt.user.contains("**Feedback**:\n- Your previous assigned tasks were rejected"));
    assert!(s.pending_feedback().is_empty());
}

#[test]
fn generation_yields_a_task_swap() {
    let mut s = fed(Framework::Dpt, 40);
    let id = s.poll(&ctx(40))[0].id;
    let (_, up) = s.complete(id, Reply::Text(GENERATION.into()), 0.1, 41).unwrap();
    match up {
        Some(SlowUpdate::Tasks { tasks, thought }) => {
            assert_eq!(tasks.len(), 3);
            assert!(thought.is_some());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn act_requests_only_when_asked_and_idle() {
    let mut s = fed(Framework::Act, 5);
    assert!(s.poll(&ctx(5)).is_empty());
    let mut c = ctx(6);
    c.needs_action = true;
    let r = s.poll(&c);
    assert_eq!(r.len(), 1);
    assert!(r[0].prompt.user.contains("Please output a valid action in JSON format."));
    assert!(s.poll(&c).is_empty());
    let (_, up) = s.complete(r[0].id, Reply::Text("(\"serve\", {\"food\": \"BeefBurger\"})".into()), 0.1, 7).unwrap();
    assert_eq!(up, Some(SlowUpdate::Action(Some(MacroAction::Serve { food: Burger::BeefBurger }))));
    let r = s.poll(&c);
    let (rec, up) = s.complete(r[0].id, Reply::Text("hmm".into()), 0.1, 8).unwrap();
    assert_eq!(rec.outcome, CallOutcome::Malformed);
    assert_eq!(up, Some(SlowUpdate::Action(None)));
}

#[test]
fn timeouts_change_nothing() {
    let mut s = fed(Framework::Dpt, 100);
    for r in s.poll(&ctx(100)) {
        let (rec, up) = s.complete(r.id, Reply::Timeout, 30.0, 200).unwrap();
        assert_eq!(rec.outcome, CallOutcome::Timeout);
        assert!(up.is_none());
    }
    assert!(s.belief.is_none() && s.guidelines.is_none());
    assert!(JobKind::ALL.iter().all(|k| !s.in_flight(*k)));
    assert!(s.complete(999, Reply::Timeout, 0.0, 200).is_none());
}

proptest! {
    #[test]
    fn buffer_is_bounded_and_ordered(cap in 1usize..20, ticks in proptest::collection::vec(0u32..200, 0..80)) {
        let mut b = TrajectoryBuffer::new(cap);
        for t in ticks {
            b.push(entry(t));
            prop_assert!(b.len() <= cap);
            let ts: Vec<u32> = b.entries().map(|e| e.tick).collect();
            prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn rendering_is_deterministic(n in 1u32..60, budget in 0usize..20_000, from in 0u32..60) {
        let mut a = TrajectoryBuffer::new(64);
        let mut b = TrajectoryBuffer::new(64);
        for t in 0..n {
            let mut e = entry(t);
            if t % 7 == 3 {
                e.deliveries.push((Burger::LettuceBurger, 15));
            }
            a.push(e.clone());
            b.push(e);
        }
        prop_assert_eq!(a.render(from, budget), b.render(from, budget));
    }

    #[test]
    fn stored_indices_strictly_increase(replies in proptest::collection::vec(any::<bool>(), 1..12)) {
        let mut s = fed(Framework::Dpt, 1);
        let mut last = 0;
        for (k, ok) in replies.into_iter().enumerate() {
            let tick = 100 * (k as u32 + 1);
            s.observe(entry(tick - 1));
            let id = s.poll(&ctx(tick)).into_iter().find(|r| r.kind == JobKind::Tom).map(|r| r.id);
            prop_assert!(id.is_some());
            let id = id.unwrap();
            let body = if ok { text_block("belief") } else { "nothing".to_string() };
            s.complete(id, Reply::Text(body), 0.1, tick);
            if let Some(b) = &s.belief {
                prop_assert!(b.index >= last);
                if ok { prop_assert!(b.index > last); }
                last = b.index;
            }
        }
    }
}
