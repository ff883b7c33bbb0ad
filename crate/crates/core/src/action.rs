//! Atomic control actions and the macro-action catalog.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::item::{Burger, Ingredient, ObjectKey, ObjectName, ObjectStatus};
use crate::layout::Direction;

/// One control input per player per tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicAction {
    Up,
    Down,
    Left,
    Right,
    Interact,
    #[default]
    Noop,
}

impl AtomicAction {
    pub fn moving(dir: Direction) -> Self {
        match dir {
            Direction::Up => AtomicAction::Up,
            Direction::Down => AtomicAction::Down,
            Direction::Left => AtomicAction::Left,
            Direction::Right => AtomicAction::Right,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            AtomicAction::Up => Some(Direction::Up),
            AtomicAction::Down => Some(Direction::Down),
            AtomicAction::Left => Some(Direction::Left),
            AtomicAction::Right => Some(Direction::Right),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AtomicAction::Up => "up",
            AtomicAction::Down => "down",
            AtomicAction::Left => "left",
            AtomicAction::Right => "right",
            AtomicAction::Interact => "interact",
            AtomicAction::Noop => "noop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "up" => AtomicAction::Up,
            "down" => AtomicAction::Down,
            "left" => AtomicAction::Left,
            "right" => AtomicAction::Right,
            "interact" => AtomicAction::Interact,
            "noop" => AtomicAction::Noop,
            _ => return None,
        })
    }
}

impl fmt::Display for AtomicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Things that `pass_on` can move to a center counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PassThing {
    Plate,
    Bread,
    LettuceChopped,
    LettuceUnchopped,
    BeefWellCooked,
    BeefFresh,
    BeefLettuce,
    BeefBurger,
    LettuceBurger,
    BeefLettuceBurger,
    FireExtinguisher,
}

impl PassThing {
    pub const ALL: [PassThing; 11] = [
        PassThing::Plate,
        PassThing::Bread,
        PassThing::LettuceChopped,
        PassThing::LettuceUnchopped,
        PassThing::BeefWellCooked,
        PassThing::BeefFresh,
        PassThing::BeefLettuce,
        PassThing::BeefBurger,
        PassThing::LettuceBurger,
        PassThing::BeefLettuceBurger,
        PassThing::FireExtinguisher,
    ];

    /// `(thing, thing_status)` as written in the action catalog.
    pub fn args(self) -> (&'static str, Option<&'static str>) {
        match self {
            PassThing::Plate => ("Plate", None),
            PassThing::Bread => ("Bread", None),
            PassThing::LettuceChopped => ("Lettuce", Some("Chopped")),
            PassThing::LettuceUnchopped => ("Lettuce", Some("Unchopped")),
            PassThing::BeefWellCooked => ("Beef", Some("Well-cooked")),
            PassThing::BeefFresh => ("Beef", Some("Fresh")),
            PassThing::BeefLettuce => ("BeefLettuce", None),
            PassThing::BeefBurger => ("BeefBurger", None),
            PassThing::LettuceBurger => ("LettuceBurger", None),
            PassThing::BeefLettuceBurger => ("BeefLettuceBurger", None),
            PassThing::FireExtinguisher => ("FireExtinguisher", None),
        }
    }

    pub fn from_args(thing: &str, status: Option<&str>) -> Option<Self> {
        PassThing::ALL.into_iter().find(|t| {
            let (name, st) = t.args();
            name == thing && (st == status || (st.is_none() && status == Some("")))
        })
    }

    /// Catalog entry of the object this refers to.
    pub fn key(self) -> ObjectKey {
        use ObjectName as N;
        use ObjectStatus as S;
        match self {
            PassThing::Plate => ObjectKey::new(N::Plate, S::Empty),
            PassThing::Bread => ObjectKey::new(N::Bread, S::None),
            PassThing::LettuceChopped => ObjectKey::new(N::Lettuce, S::Chopped),
            PassThing::LettuceUnchopped => ObjectKey::new(N::Lettuce, S::Unchopped),
            PassThing::BeefWellCooked => ObjectKey::new(N::Beef, S::WellCooked),
            PassThing::BeefFresh => ObjectKey::new(N::Beef, S::Fresh),
            PassThing::BeefLettuce => ObjectKey::new(N::BeefLettuce, S::None),
            PassThing::BeefBurger => ObjectKey::new(N::BeefBurger, S::None),
            PassThing::LettuceBurger => ObjectKey::new(N::LettuceBurger, S::None),
            PassThing::BeefLettuceBurger => ObjectKey::new(N::BeefLettuceBurger, S::None),
            PassThing::FireExtinguisher => ObjectKey::new(N::FireExtinguisher, S::None),
        }
    }
}

/// High-level task verbs handed from the FSM to the executor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum MacroAction {
    Prepare { food: Ingredient, plate: bool },
    Assemble { food: Burger },
    PassOn { thing: PassThing },
    Serve { food: Burger },
    PutoutFire,
    CleanACounter,
}

impl MacroAction {
    pub fn name(&self) -> &'static str {
        match self {
            MacroAction::Prepare { .. } => "prepare",
            MacroAction::Assemble { .. } => "assemble",
            MacroAction::PassOn { .. } => "pass_on",
            MacroAction::Serve { .. } => "serve",
            MacroAction::PutoutFire => "putout_fire",
            MacroAction::CleanACounter => "clean_a_counter",
        }
    }

    /// Python-literal form, e.g. `("prepare", {"food": "Beef", "plate": False})`.
    pub fn to_literal(&self) -> String {
        match self {
            MacroAction::Prepare { food, plate } => alloc::format!(
                "(\"prepare\", {{\"food\": \"{}\", \"plate\": {}}})",
                food.as_str(),
                if *plate { "True" } else { "False" }
            ),
            MacroAction::Assemble { food } => {
                alloc::format!("(\"assemble\", {{\"food\": \"{}\"}})", food.as_str())
            }
            MacroAction::PassOn { thing } => match thing.args() {
                (t, None) => alloc::format!("(\"pass_on\", {{\"thing\": \"{t}\"}})"),
                (t, Some(s)) => {
                    alloc::format!("(\"pass_on\", {{\"thing\": \"{t}\", \"thing_status\": \"{s}\"}})")
                }
            },
            MacroAction::Serve { food } => {
                alloc::format!("(\"serve\", {{\"food\": \"{}\"}})", food.as_str())
            }
            MacroAction::PutoutFire => "(\"putout_fire\", {})".into(),
            MacroAction::CleanACounter => "(\"clean_a_counter\", {})".into(),
        }
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}
