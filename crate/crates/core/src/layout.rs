//! Kitchen geometry and the ASCII layout format.
//!
//! One character per cell, rows separated by newlines:
//!
//! | char | cell              | char | cell              |
//! |------|-------------------|------|-------------------|
//! | `#`  | wall              | `U`  | cutboard          |
//! | `.`  | floor             | `A`  | pan               |
//! | `C`  | counter           | `S`  | serving area      |
//! | `X`  | center counter    | `E`  | extinguisher home |
//! | `B`  | beef station      | `T`  | trash can         |
//! | `L`  | lettuce station   | `1`  | spawn, seat 0     |
//! | `D`  | bread station     | `2`  | spawn, seat 1     |
//! | `P`  | plate station     |      |                   |

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NEW_COUNTER_CIRCUIT: &str = include_str!("../assets/layouts/new_counter_circuit.txt");
pub const NEW_ASYMMETRIC_ADVANTAGES: &str =
    include_str!("../assets/layouts/new_asymmetric_advantages.txt");

/// Layouts shipped with the crate, by name.
pub const SHIPPED: [(&str, &str); 2] = [
    ("new_counter_circuit", NEW_COUNTER_CIRCUIT),
    ("new_asymmetric_advantages", NEW_ASYMMETRIC_ADVANTAGES),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Floor,
    Wall,
    Counter,
    CenterCounter,
    BeefStation,
    LettuceStation,
    BreadStation,
    PlateStation,
    Cutboard,
    Pan,
    Serving,
    ExtinguisherHome,
    Trash,
}

impl CellKind {
    pub fn from_char(c: char) -> Option<CellKind> {
        Some(match c {
            '#' => CellKind::Wall,
            '.' | '1' | '2' => CellKind::Floor,
            'C' => CellKind::Counter,
            'X' => CellKind::CenterCounter,
            'B' => CellKind::BeefStation,
            'L' => CellKind::LettuceStation,
            'D' => CellKind::BreadStation,
            'P' => CellKind::PlateStation,
            'U' => CellKind::Cutboard,
            'A' => CellKind::Pan,
            'S' => CellKind::Serving,
            'E' => CellKind::ExtinguisherHome,
            'T' => CellKind::Trash,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            CellKind::Floor => '.',
            CellKind::Wall => '#',
            CellKind::Counter => 'C',
            CellKind::CenterCounter => 'X',
            CellKind::BeefStation => 'B',
            CellKind::LettuceStation => 'L',
            CellKind::BreadStation => 'D',
            CellKind::PlateStation => 'P',
            CellKind::Cutboard => 'U',
            CellKind::Pan => 'A',
            CellKind::Serving => 'S',
            CellKind::ExtinguisherHome => 'E',
            CellKind::Trash => 'T',
        }
    }

    /// Cells that hold at most one item on top of them.
    pub fn is_surface(self) -> bool {
        matches!(
            self,
            CellKind::Counter
                | CellKind::CenterCounter
                | CellKind::ExtinguisherHome
                | CellKind::Cutboard
                | CellKind::Pan
        )
    }

    /// Plain counters, counted in the `counters` census.
    pub fn is_counter(self) -> bool {
        matches!(self, CellKind::Counter | CellKind::CenterCounter | CellKind::ExtinguisherHome)
    }

    /// Non-floor, non-wall cells a player interacts with.
    pub fn is_station(self) -> bool {
        !matches!(self, CellKind::Floor | CellKind::Wall | CellKind::Counter | CellKind::CenterCounter)
    }
}

/// Grid coordinate. Ordering is row-major, so it matches the cell index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub y: u16,
    pub x: u16,
}

impl Pos {
    pub const fn new(x: u16, y: u16) -> Self {
        Pos { y, x }
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        (self.x as i32 - other.x as i32).unsigned_abs() + (self.y as i32 - other.y as i32).unsigned_abs()
    }

    pub fn step(self, dir: Direction) -> Option<Pos> {
        let (dx, dy) = dir.delta();
        let x = self.x as i32 + dx;
        let y = self.y as i32 + dy;
        if x < 0 || y < 0 {
            return None;
        }
        Some(Pos::new(x as u16, y as u16))
    }

    /// Direction from `self` to an orthogonally adjacent `other`.
    pub fn direction_to(self, other: Pos) -> Option<Direction> {
        Direction::ALL.into_iter().find(|&d| self.step(d) == Some(other))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("parse error at row {row}, col {col}: {message}")]
    Parse { row: usize, col: usize, message: String },
    #[error("invalid layout: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub name: String,
    pub width: u16,
    pub height: u16,
    pub cells: Vec<CellKind>,
    /// Spawn cell per seat, in seat order.
    pub spawns: Vec<Pos>,
    /// Original text, kept so logs can embed it.
    pub source: String,
}

impl Layout {
    pub fn parse(name: &str, text: &str) -> Result<Layout, LayoutError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .collect::<Vec<_>>();
        let rows: Vec<&str> = {
            let mut end = rows.len();
            while end > 0 && rows[end - 1].is_empty() {
                end -= 1;
            }
            rows[..end].to_vec()
        };
        if rows.is_empty() {
            return Err(LayoutError::Parse { row: 0, col: 0, message: "empty layout".into() });
        }
        let width = rows[0].chars().count();
        if width == 0 || width > u16::MAX as usize || rows.len() > u16::MAX as usize {
            return Err(LayoutError::Parse { row: 0, col: 0, message: "bad dimensions".into() });
        }
        let mut cells = Vec::with_capacity(width * rows.len());
        let mut spawn1 = None;
        let mut spawn2 = None;
        for (row, line) in rows.iter().enumerate() {
            let n = line.chars().count();
            if n != width {
                return Err(LayoutError::Parse {
                    row,
                    col: n.min(width),
                    message: alloc::format!("row has {n} cells, expected {width}"),
                });
            }
            for (col, c) in line.chars().enumerate() {
                let kind = CellKind::from_char(c).ok_or_else(|| LayoutError::Parse {
                    row,
                    col,
                    message: alloc::format!("unknown cell character {c:?}"),
                })?;
                let here = Pos::new(col as u16, row as u16);
                let slot = match c {
                    '1' => Some(&mut spawn1),
                    '2' => Some(&mut spawn2),
                    _ => None,
                };
                if let Some(slot) = slot {
                    if slot.is_some() {
                        return Err(LayoutError::Parse { row, col, message: "duplicate spawn".into() });
                    }
                    *slot = Some(here);
                }
                cells.push(kind);
            }
        }
        let mut spawns = Vec::new();
        match (spawn1, spawn2) {
            (Some(a), b) => {
                spawns.push(a);
                spawns.extend(b);
            }
            (None, _) => return Err(LayoutError::Validation("missing spawn `1`".into())),
        }
        let layout = Layout {
            name: name.to_string(),
            width: width as u16,
            height: rows.len() as u16,
            cells,
            spawns,
            source: text.to_string(),
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Parses one of the layouts in [`SHIPPED`].
    pub fn shipped(name: &str) -> Option<Layout> {
        SHIPPED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, text)| Layout::parse(n, text).expect("shipped layout is valid"))
    }

    fn validate(&self) -> Result<(), LayoutError> {
        if !self.cells.iter().any(|&c| c == CellKind::Serving) {
            return Err(LayoutError::Validation("no serving area".into()));
        }
        let regions: Vec<Vec<bool>> = self.spawns.iter().map(|&s| self.flood_fill(s)).collect();
        for (i, pos) in self.positions().enumerate() {
            let kind = self.cells[i];
            if !kind.is_station() {
                continue;
            }
            let reachable = regions.iter().any(|r| self.neighbors(pos).any(|n| r[self.index(n)]));
            if !reachable {
                return Err(LayoutError::Validation(alloc::format!(
                    "{kind:?} at {pos} is not adjacent to reachable floor"
                )));
            }
        }
        for (seat, region) in regions.iter().enumerate() {
            for needed in [CellKind::Pan, CellKind::Cutboard] {
                let has = self.positions().any(|p| {
                    self.kind(p) == needed && self.neighbors(p).any(|n| region[self.index(n)])
                });
                if !has {
                    return Err(LayoutError::Validation(alloc::format!(
                        "region of seat {seat} has no reachable {needed:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn index(&self, pos: Pos) -> usize {
        pos.y as usize * self.width as usize + pos.x as usize
    }

    pub fn pos(&self, index: usize) -> Pos {
        Pos::new((index % self.width as usize) as u16, (index / self.width as usize) as u16)
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.x < self.width && pos.y < self.height
    }

    pub fn kind(&self, pos: Pos) -> CellKind {
        if self.contains(pos) {
            self.cells[self.index(pos)]
        } else {
            CellKind::Wall
        }
    }

    pub fn is_floor(&self, pos: Pos) -> bool {
        self.kind(pos) == CellKind::Floor
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.cells.len()).map(move |i| self.pos(i))
    }

    pub fn cells_of(&self, kind: CellKind) -> impl Iterator<Item = Pos> + '_ {
        self.positions().filter(move |&p| self.kind(p) == kind)
    }

    pub fn neighbors(&self, pos: Pos) -> impl Iterator<Item = Pos> + '_ {
        Direction::ALL
            .into_iter()
            .filter_map(move |d| pos.step(d))
            .filter(move |&p| self.contains(p))
    }

    /// Floor cells reachable from `start` (walking on floor only).
    pub fn flood_fill(&self, start: Pos) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        if !self.is_floor(start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[self.index(start)] = true;
        while let Some(p) = queue.pop_front() {
            for n in self.neighbors(p) {
                let i = self.index(n);
                if !seen[i] && self.is_floor(n) {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Renders the grid back to text, without spawns.
    pub fn render(&self) -> Vec<String> {
        (0..self.height)
            .map(|y| (0..self.width).map(|x| self.kind(Pos::new(x, y)).to_char()).collect())
            .collect()
    }
}
