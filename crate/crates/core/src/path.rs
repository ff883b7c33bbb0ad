//! Shortest move sequences over `(cell, facing)` states.
//!
//! A move toward a blocked cell (wall, station, occupied floor) only turns the
//! player, exactly as the environment resolves it, so turning in place is just
//! another unit-cost edge.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use thiserror::Error;

use crate::action::AtomicAction;
use crate::layout::{Direction, Layout, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no goal cell is reachable")]
    NoPath,
    #[error("start cell is not walkable")]
    BadStart,
}

fn dir_index(d: Direction) -> usize {
    match d {
        Direction::Up => 0,
        Direction::Down => 1,
        Direction::Left => 2,
        Direction::Right => 3,
    }
}

/// Successor of `(pos, facing)` under a move in `dir`.
pub fn step_state(layout: &Layout, occupied: &[Pos], pos: Pos, dir: Direction) -> Pos {
    match pos.step(dir) {
        Some(next) if layout.is_floor(next) && !occupied.contains(&next) => next,
        _ => pos,
    }
}

fn is_goal(goals: &[Pos], pos: Pos, facing: Direction) -> bool {
    pos.step(facing).is_some_and(|c| goals.contains(&c))
}

fn heuristic(goals: &[Pos], pos: Pos) -> u32 {
    goals.iter().map(|g| pos.manhattan(*g).saturating_sub(1)).min().unwrap_or(0)
}

/// Minimum-length action list that leaves the player adjacent to, and facing, one of
/// `goals`. Empty when that already holds. Cells in `occupied` are treated as walls.
pub fn plan_path(
    layout: &Layout,
    start: Pos,
    facing: Direction,
    goals: &[Pos],
    occupied: &[Pos],
) -> Result<Vec<AtomicAction>, PathError> {
    if !layout.is_floor(start) {
        return Err(PathError::BadStart);
    }
    if goals.is_empty() {
        return Err(PathError::NoPath);
    }
    if is_goal(goals, start, facing) {
        return Ok(Vec::new());
    }
    let n = layout.cells.len() * 4;
    let key = |p: Pos, d: Direction| layout.index(p) * 4 + dir_index(d);
    let mut best = vec![u32::MAX; n];
    let mut parent: Vec<Option<(usize, Direction)>> = vec![None; n];
    let mut open = BinaryHeap::new();
    let s = key(start, facing);
    best[s] = 0;
    open.push(Reverse((heuristic(goals, start), 0u32, s)));
    while let Some(Reverse((_, g, k))) = open.pop() {
        if g > best[k] {
            continue;
        }
        let pos = layout.pos(k / 4);
        let facing = Direction::ALL[k % 4];
        if is_goal(goals, pos, facing) {
            let mut moves = Vec::new();
            let mut at = k;
            while let Some((prev, dir)) = parent[at] {
                moves.push(AtomicAction::moving(dir));
                at = prev;
            }
            moves.reverse();
            return Ok(moves);
        }
        for dir in Direction::ALL {
            let next = step_state(layout, occupied, pos, dir);
            let nk = key(next, dir);
            let ng = g + 1;
            if ng < best[nk] {
                best[nk] = ng;
                parent[nk] = Some((k, dir));
                open.push(Reverse((ng + heuristic(goals, next), ng, nk)));
            }
        }
    }
    Err(PathError::NoPath)
}

/// Move counts from one `(cell, facing)` start to every interaction target.
#[derive(Debug, Clone)]
pub struct Reach {
    /// Per cell index: fewest moves to stand next to the cell facing it.
    cost: Vec<u32>,
}

impl Reach {
    pub fn from(layout: &Layout, start: Pos, facing: Direction, occupied: &[Pos]) -> Reach {
        let n = layout.cells.len();
        let mut seen = vec![false; n * 4];
        let mut cost = vec![u32::MAX; n];
        let mut queue = alloc::collections::VecDeque::new();
        if layout.is_floor(start) {
            seen[layout.index(start) * 4 + dir_index(facing)] = true;
            queue.push_back((start, facing, 0u32));
        }
        while let Some((pos, f, d)) = queue.pop_front() {
            if let Some(c) = pos.step(f).filter(|c| layout.contains(*c)) {
                let ci = layout.index(c);
                cost[ci] = cost[ci].min(d);
            }
            for dir in Direction::ALL {
                let next = step_state(layout, occupied, pos, dir);
                let k = layout.index(next) * 4 + dir_index(dir);
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back((next, dir, d + 1));
                }
            }
        }
        Reach { cost }
    }

    pub fn cost(&self, layout: &Layout, target: Pos) -> Option<u32> {
        if !layout.contains(target) {
            return None;
        }
        Some(self.cost[layout.index(target)]).filter(|&c| c != u32::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SHIPPED;
    use alloc::collections::VecDeque;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain breadth-first search over the same state space.
    fn bfs_distance(layout: &Layout, start: Pos, facing: Direction, goal: Pos, occupied: &[Pos]) -> Option<usize> {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut queue = VecDeque::from([((start, facing), 0usize)]);
        seen.insert((start, facing));
        while let Some(((p, f), d)) = queue.pop_front() {
            if p.step(f) == Some(goal) {
                return Some(d);
            }
            for dir in Direction::ALL {
                let np = match p.step(dir) {
                    Some(c) if layout.is_floor(c) && !occupied.contains(&c) => c,
                    _ => p,
                };
                if seen.insert((np, dir)) {
                    queue.push_back(((np, dir), d + 1));
                }
            }
        }
        None
    }

    fn simulate(layout: &Layout, mut pos: Pos, mut facing: Direction, moves: &[AtomicAction], occupied: &[Pos]) -> (Pos, Direction) {
        for m in moves {
            let d = m.direction().unwrap();
            facing = d;
            pos = step_state(layout, occupied, pos, d);
        }
        (pos, facing)
    }

    #[test]
    fn adjacent_and_facing_needs_nothing() {
        let layout = Layout::shipped("new_counter_circuit").unwrap();
        let start = layout.spawns[0];
        let goal = start.step(Direction::Up).unwrap();
        assert_eq!(plan_path(&layout, start, Direction::Up, &[goal], &[]), Ok(vec![]));
        assert_eq!(plan_path(&layout, start, Direction::Left, &[goal], &[]), Ok(vec![AtomicAction::Up]));
    }

    #[test]
    fn walled_in_goal_has_no_path() {
        let layout = Layout::parse("walled", "CBDLPC\nA1...C\nU....S\nCCC#CC\nCC#C#C\nCCCCCC\n").unwrap();
        let enclosed = Pos::new(3, 4);
        assert_eq!(plan_path(&layout, layout.spawns[0], Direction::Up, &[enclosed], &[]), Err(PathError::NoPath));
    }

    #[test]
    fn a_star_matches_bfs_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for (name, _) in SHIPPED {
            let layout = Layout::shipped(name).unwrap();
            let floors: Vec<Pos> = layout.positions().filter(|&p| layout.is_floor(p)).collect();
            let targets: Vec<Pos> = layout.positions().filter(|&p| !layout.is_floor(p)).collect();
            for _ in 0..600 {
                let start = floors[rng.next_u32() as usize % floors.len()];
                let goal = targets[rng.next_u32() as usize % targets.len()];
                let facing = Direction::ALL[rng.next_u32() as usize % 4];
                let other = floors[rng.next_u32() as usize % floors.len()];
                let occupied: Vec<Pos> = if other != start && rng.next_u32() % 2 == 0 { vec![other] } else { vec![] };
                let oracle = bfs_distance(&layout, start, facing, goal, &occupied);
                match plan_path(&layout, start, facing, &[goal], &occupied) {
                    Ok(moves) => {
                        assert_eq!(Some(moves.len()), oracle, "{name} {start} -> {goal}");
                        let (p, f) = simulate(&layout, start, facing, &moves, &occupied);
                        assert_eq!(p.step(f), Some(goal));
                    }
                    Err(PathError::NoPath) => assert_eq!(oracle, None),
                    Err(e) => panic!("{e}"),
                }
                let reach = Reach::from(&layout, start, facing, &occupied);
                assert_eq!(reach.cost(&layout, goal).map(|c| c as usize), oracle);
                checked += 1;
            }
        }
        assert!(checked >= 1000);
    }
}
