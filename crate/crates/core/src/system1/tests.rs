use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::dsl::{parse_condition, Condition};
use crate::env::{EnvConfig, EventKind, GameEvent, OrderSchedule, ScheduledOrder};
use crate::item::Item;
use crate::layout::{Layout, Pos};

fn config(orders: &[(u32, Burger, u32)], overcook: u32) -> EnvConfig {
    EnvConfig {
        overcook_ticks: overcook,
        schedule: OrderSchedule::Fixed {
            arrivals: orders.iter().map(|&(tick, burger, lifetime)| ScheduledOrder { tick, burger, lifetime }).collect(),
            cap: 5,
        },
        ..EnvConfig::default()
    }
}

fn circuit(cfg: EnvConfig) -> GameState {
    let layout = Arc::new(Layout::shipped("new_counter_circuit").unwrap());
    GameState::new(layout, Arc::new(cfg), 2)
}

fn put(state: &mut GameState, pos: Pos, item: Item) {
    let i = state.layout.index(pos);
    state.slots[i] = Some(item);
}

/// Seat 0 is driven by `s1`; seat 1 idles.
fn run(state: &mut GameState, s1: &mut System1, ticks: u32) -> (Vec<AtomicAction>, Vec<DecisionRecord>, Vec<GameEvent>) {
    let (mut actions, mut records, mut events) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..ticks {
        if state.is_over() {
            break;
        }
        let (a, rec) = s1.tick(state);
        actions.push(a);
        records.push(rec);
        events.extend(state.step(&[a, AtomicAction::Noop]));
    }
    (actions, records, events)
}

fn always(action: MacroAction) -> AssignedTask {
    AssignedTask::Conditional { condition: Condition::always(), action }
}

#[test]
fn default_mode_prepares_beef_for_the_most_urgent_order() {
    let s = circuit(config(&[(0, Burger::BeefBurger, 30), (0, Burger::LettuceBurger, 45)], 40));
    let mut s1 = System1::new(0);
    let doc = s.snapshot_document(0);
    let d = s1.decide(&s, &doc, &mut Vec::new());
    let first = s.orders.iter().find(|o| o.burger == Burger::BeefBurger).unwrap().id;
    assert_eq!(
        d,
        Decision::Start {
            action: MacroAction::Prepare { food: Ingredient::Beef, plate: false },
            source: MacroSource::Default { order_id: first }
        }
    );
    assert_eq!(s1.pipeline, Some(first));
}

#[test]
fn a_true_conditional_fires_exactly_once() {
    let mut s = circuit(config(&[], 10_000));
    let mut s1 = System1::new(0);
    s1.apply_assigned_tasks(vec![always(MacroAction::Prepare { food: Ingredient::Bread, plate: false })]);
    assert_eq!(s1.queue.mode, Mode::Directed);
    let (_, records, _) = run(&mut s, &mut s1, 200);
    let fired: Vec<&IssuedMacro> =
        records.iter().flat_map(|r| &r.issued).filter(|i| matches!(i.source, MacroSource::Task { .. })).collect();
    assert_eq!(fired.len(), 1);
    assert_eq!(records[0].issued[0].action, MacroAction::Prepare { food: Ingredient::Bread, plate: false });
    assert_eq!(s1.queue.mode, Mode::Default);
    let done = records.iter().flat_map(|r| &r.finished).filter(|f| f.outcome == MacroOutcome::Done).count();
    assert_eq!(done, 1);
}

#[test]
fn fire_preempts_assembly() {
    let mut s = circuit(config(&[(0, Burger::BeefBurger, 400)], 40));
    let mut s1 = System1::new(0);
    // Let the agent get into its pipeline, then set a pan on fire.
    let (_, records, _) = run(&mut s, &mut s1, 5);
    assert!(records.iter().any(|r| !r.issued.is_empty()));
    let pan = s.layout.cells_of(CellKind::Pan).find(|&p| s.slot(p).is_none()).unwrap();
    put(&mut s, pan, Item::new(ItemKind::Beef { status: BeefStatus::WellCooked, elapsed: 39 }));
    let mut fire_tick = None;
    let mut putout_tick = None;
    for _ in 0..200 {
        let (a, rec) = s1.tick(&s);
        if rec.issued.iter().any(|i| i.action == MacroAction::PutoutFire) && putout_tick.is_none() {
            putout_tick = Some(rec.tick);
            assert_eq!(rec.fsm, FsmLabel::EmergencyFire);
            assert_ne!(a, AtomicAction::Noop);
        }
        for e in s.step(&[a, AtomicAction::Noop]) {
            match e.kind {
                EventKind::FireStarted { .. } => fire_tick = Some(e.tick),
                EventKind::FireExtinguished { player, .. } => {
                    assert_eq!(player, 0);
                    let (f, p) = (fire_tick.unwrap(), putout_tick.unwrap());
                    assert!(p <= f + 2, "fire at {f}, putout at {p}");
                    return;
                }
                _ => {}
            }
        }
    }
    panic!("fire was never extinguished");
}

#[test]
fn applying_an_empty_list_returns_to_default_mode() {
    let mut q = TaskQueue::default();
    q.apply_assigned_tasks(vec![AssignedTask::OrderGoal { name: Burger::BeefBurger }]);
    assert_eq!(q.mode, Mode::Directed);
    q.apply_assigned_tasks(vec![]);
    assert_eq!(q.mode, Mode::Default);
    assert!(q.tasks.is_empty());
}

#[test]
fn applying_the_same_list_twice_is_idempotent() {
    let list = vec![
        always(MacroAction::PutoutFire),
        AssignedTask::OrderGoal { name: Burger::LettuceBurger },
    ];
    let mut a = TaskQueue::default();
    a.apply_assigned_tasks(list.clone());
    let once = a.clone();
    a.apply_assigned_tasks(list);
    assert_eq!(a, once);
}

#[test]
fn a_swap_does_not_abort_the_macro_in_flight() {
    let mut s = circuit(config(&[(0, Burger::LettuceBurger, 400)], 10_000));
    let mut s1 = System1::new(0);
    let (_, records, _) = run(&mut s, &mut s1, 2);
    let first = records[0].issued[0].action;
    let before = s1.queue.active.clone().expect("macro in flight");
    s1.apply_assigned_tasks(vec![always(MacroAction::CleanACounter)]);
    assert_eq!(s1.queue.active, Some(before));
    // The first macro runs to completion before the new head is consulted.
    let (_, records, _) = run(&mut s, &mut s1, 200);
    let finished_first = records.iter().position(|r| r.finished.iter().any(|f| f.action == first)).unwrap();
    let new_head = records.iter().position(|r| r.issued.iter().any(|i| i.action == MacroAction::CleanACounter)).unwrap();
    assert!(finished_first <= new_head);
    assert!(records[..finished_first].iter().all(|r| r.finished.is_empty()));
}

#[test]
fn identical_seeds_give_identical_action_streams() {
    let cfg = EnvConfig { seed: 11, ..EnvConfig::default() };
    let go = || {
        let mut s = circuit(cfg.clone());
        let mut s1 = System1::new(0);
        let (actions, _, _) = run(&mut s, &mut s1, 500);
        (actions, s.state_hash())
    };
    let (a, h) = go();
    assert_eq!(a.len(), 500);
    assert_eq!(go(), (a, h));
}

#[test]
fn waiting_on_the_pan_is_a_noop() {
    let mut s = circuit(config(&[(0, Burger::BeefBurger, 400)], 10_000));
    let pan = s.layout.cells_of(CellKind::Pan).next().unwrap();
    put(&mut s, pan, Item::new(ItemKind::Beef { status: BeefStatus::InProgress, elapsed: 0 }));
    let mut s1 = System1::new(0);
    let (a, rec) = s1.tick(&s);
    assert_eq!(a, AtomicAction::Noop);
    assert_eq!(rec.fsm, FsmLabel::AwaitingCook);
    assert!(rec.issued.is_empty());
}

#[test]
fn default_pipeline_delivers_a_lettuce_burger() {
    let mut s = circuit(config(&[(0, Burger::LettuceBurger, 400)], 10_000));
    let mut s1 = System1::new(0);
    let (_, _, events) = run(&mut s, &mut s1, 300);
    let delivered: Vec<i32> = events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Delivery { burger: Burger::LettuceBurger, reward, player: 0, .. } => Some(reward),
            _ => None,
        })
        .collect();
    assert_eq!(delivered, [15]);
}

#[test]
fn order_goals_block_later_goals_until_served() {
    let mut s = circuit(config(&[(0, Burger::LettuceBurger, 400), (0, Burger::BeefBurger, 400)], 10_000));
    let mut s1 = System1::new(0);
    s1.apply_assigned_tasks(vec![
        AssignedTask::OrderGoal { name: Burger::BeefBurger },
        AssignedTask::OrderGoal { name: Burger::LettuceBurger },
    ]);
    let (_, _, events) = run(&mut s, &mut s1, 400);
    let served: Vec<Burger> = events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Delivery { burger, .. } => Some(burger),
            _ => None,
        })
        .collect();
    assert_eq!(served, [Burger::BeefBurger, Burger::LettuceBurger]);
    assert_eq!(s1.queue.mode, Mode::Default);
}

#[test]
fn eval_errors_are_recorded_and_skipped() {
    let mut s = circuit(config(&[], 10_000));
    let mut s1 = System1::new(0);
    let bad = parse_condition("lambda s: s['nope'] > 0").unwrap();
    s1.apply_assigned_tasks(vec![
        AssignedTask::Conditional { condition: bad, action: MacroAction::PutoutFire },
        always(MacroAction::Prepare { food: Ingredient::Bread, plate: false }),
    ]);
    let (_, records, _) = run(&mut s, &mut s1, 3);
    assert_eq!(records[0].eval_errors.len(), 1);
    assert_eq!(records[0].issued[0].source, MacroSource::Task { index: 1, generation: 1 });
    let fb = s1.take_feedback();
    assert_eq!(fb.len(), 1);
    assert_eq!(fb[0].index, 0);
    assert!(s1.take_feedback().is_empty());
}

#[test]
fn over_production_guard_waits_for_the_partner() {
    let mut s = circuit(config(&[(0, Burger::BeefBurger, 400)], 10_000));
    // The partner carries beef that is already cooked: demand is covered.
    s.players[1].held = Some(Item::new(ItemKind::Beef { status: BeefStatus::WellCooked, elapsed: 0 }));
    let mut s1 = System1::new(0);
    let (a, rec) = s1.tick(&s);
    assert_eq!(a, AtomicAction::Noop);
    assert!(rec.issued.is_empty());
    assert_eq!(supply(&s, Ingredient::Beef), 1);
    assert_eq!(demand(&s, Ingredient::Beef), 1);
}

const CONDITIONS: [&str; 3] = ["lambda s: True", "lambda s: False", "lambda s: s['missing']"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditionals_fire_at_most_once_and_in_order(
        picks in proptest::collection::vec((0usize..3, 0usize..3), 1..6),
        seed in 0u64..50,
    ) {
        let mut s = circuit(EnvConfig { seed, ..EnvConfig::default() });
        let mut s1 = System1::new(0);
        let actions = [
            MacroAction::Prepare { food: Ingredient::Bread, plate: false },
            MacroAction::CleanACounter,
            MacroAction::Prepare { food: Ingredient::Lettuce, plate: false },
        ];
        let tasks: Vec<AssignedTask> = picks
            .iter()
            .map(|&(c, a)| AssignedTask::Conditional { condition: parse_condition(CONDITIONS[c]).unwrap(), action: actions[a] })
            .collect();
        s1.apply_assigned_tasks(tasks);
        let (_, records, _) = run(&mut s, &mut s1, 150);
        let fired: Vec<usize> = records
            .iter()
            .flat_map(|r| &r.issued)
            .filter_map(|i| match i.source { MacroSource::Task { index, .. } => Some(index), _ => None })
            .collect();
        let expected: Vec<usize> = picks.iter().enumerate().filter(|(_, p)| p.0 == 0).map(|(i, _)| i).collect();
        prop_assert_eq!(fired, expected);
        let errors = records.iter().any(|r| !r.eval_errors.is_empty());
        prop_assert_eq!(errors, picks.iter().any(|p| p.0 == 2));
    }

    #[test]
    fn default_pipeline_targets_the_most_urgent_order(seed in 0u64..200) {
        let mut s = circuit(EnvConfig { seed, overcook_ticks: 60, ..EnvConfig::default() });
        let mut s1 = System1::new(0);
        for _ in 0..300 {
            let (a, rec) = s1.tick(&s);
            for i in &rec.issued {
                if let MacroSource::Default { order_id } = i.source {
                    let min = s.orders.iter().map(|o| o.remain_time).min().unwrap();
                    let chosen = s.orders.iter().find(|o| o.id == order_id).unwrap();
                    prop_assert_eq!(chosen.remain_time, min);
                }
            }
            s.step(&[a, AtomicAction::Noop]);
        }
    }
}
