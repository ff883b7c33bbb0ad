//! Kitchen objects, the `(name, status)` catalog, and per-burger key-event credits.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Index of a player seat. Seat 0 spawns on `1`, seat 1 on `2`.
pub type PlayerId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectName {
    Beef,
    Lettuce,
    Bread,
    BeefLettuce,
    BeefBurger,
    LettuceBurger,
    BeefLettuceBurger,
    Plate,
    FireExtinguisher,
    Fire,
}

impl ObjectName {
    pub const ALL: [ObjectName; 10] = [
        ObjectName::Beef,
        ObjectName::Lettuce,
        ObjectName::Bread,
        ObjectName::BeefLettuce,
        ObjectName::BeefBurger,
        ObjectName::LettuceBurger,
        ObjectName::BeefLettuceBurger,
        ObjectName::Plate,
        ObjectName::FireExtinguisher,
        ObjectName::Fire,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectName::Beef => "Beef",
            ObjectName::Lettuce => "Lettuce",
            ObjectName::Bread => "Bread",
            ObjectName::BeefLettuce => "BeefLettuce",
            ObjectName::BeefBurger => "BeefBurger",
            ObjectName::LettuceBurger => "LettuceBurger",
            ObjectName::BeefLettuceBurger => "BeefLettuceBurger",
            ObjectName::Plate => "Plate",
            ObjectName::FireExtinguisher => "FireExtinguisher",
            ObjectName::Fire => "Fire",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|n| n.as_str() == s)
    }
}

impl fmt::Display for ObjectName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Status tag of a catalog entry. `None` renders as the empty string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectStatus {
    None,
    Fresh,
    InProgress,
    WellCooked,
    Overcooked,
    Unchopped,
    Chopped,
    Empty,
}

impl ObjectStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectStatus::None => "",
            ObjectStatus::Fresh => "Fresh",
            ObjectStatus::InProgress => "In-progress",
            ObjectStatus::WellCooked => "Well-cooked",
            ObjectStatus::Overcooked => "Overcooked",
            ObjectStatus::Unchopped => "Unchopped",
            ObjectStatus::Chopped => "Chopped",
            ObjectStatus::Empty => "Empty",
        }
    }
}

/// A `(name, status)` pair from the object catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectKey {
    pub name: ObjectName,
    pub status: ObjectStatus,
}

impl ObjectKey {
    pub const fn new(name: ObjectName, status: ObjectStatus) -> Self {
        ObjectKey { name, status }
    }

    pub fn index(self) -> Option<usize> {
        CATALOG.iter().position(|k| *k == self)
    }

    pub fn from_strs(name: &str, status: &str) -> Option<Self> {
        CATALOG
            .iter()
            .copied()
            .find(|k| k.name.as_str() == name && k.status.as_str() == status)
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(\"{}\", \"{}\")", self.name.as_str(), self.status.as_str())
    }
}

/// Every `(name, status)` pair an agent can observe, in document order.
pub const CATALOG: [ObjectKey; 14] = [
    ObjectKey::new(ObjectName::Beef, ObjectStatus::Fresh),
    ObjectKey::new(ObjectName::Beef, ObjectStatus::InProgress),
    ObjectKey::new(ObjectName::Beef, ObjectStatus::WellCooked),
    ObjectKey::new(ObjectName::Beef, ObjectStatus::Overcooked),
    ObjectKey::new(ObjectName::Lettuce, ObjectStatus::Unchopped),
    ObjectKey::new(ObjectName::Lettuce, ObjectStatus::Chopped),
    ObjectKey::new(ObjectName::Bread, ObjectStatus::None),
    ObjectKey::new(ObjectName::BeefLettuce, ObjectStatus::None),
    ObjectKey::new(ObjectName::BeefBurger, ObjectStatus::None),
    ObjectKey::new(ObjectName::LettuceBurger, ObjectStatus::None),
    ObjectKey::new(ObjectName::BeefLettuceBurger, ObjectStatus::None),
    ObjectKey::new(ObjectName::Plate, ObjectStatus::Empty),
    ObjectKey::new(ObjectName::FireExtinguisher, ObjectStatus::None),
    ObjectKey::new(ObjectName::Fire, ObjectStatus::None),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ingredient {
    Beef,
    Lettuce,
    Bread,
}

impl Ingredient {
    pub const ALL: [Ingredient; 3] = [Ingredient::Beef, Ingredient::Lettuce, Ingredient::Bread];

    pub fn as_str(self) -> &'static str {
        match self {
            Ingredient::Beef => "Beef",
            Ingredient::Lettuce => "Lettuce",
            Ingredient::Bread => "Bread",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|i| i.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Burger {
    LettuceBurger,
    BeefBurger,
    BeefLettuceBurger,
}

impl Burger {
    pub const ALL: [Burger; 3] = [Burger::LettuceBurger, Burger::BeefBurger, Burger::BeefLettuceBurger];

    pub fn as_str(self) -> &'static str {
        self.object_name().as_str()
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|b| b.as_str() == s)
    }

    pub fn object_name(self) -> ObjectName {
        match self {
            Burger::LettuceBurger => ObjectName::LettuceBurger,
            Burger::BeefBurger => ObjectName::BeefBurger,
            Burger::BeefLettuceBurger => ObjectName::BeefLettuceBurger,
        }
    }

    /// Points for serving this burger against a pending order.
    pub fn value(self) -> i32 {
        match self {
            Burger::LettuceBurger => 15,
            Burger::BeefBurger => 20,
            Burger::BeefLettuceBurger => 25,
        }
    }

    pub fn contents(self) -> PlateContents {
        match self {
            Burger::LettuceBurger => PlateContents { beef: false, lettuce: true, bread: true },
            Burger::BeefBurger => PlateContents { beef: true, lettuce: false, bread: true },
            Burger::BeefLettuceBurger => PlateContents { beef: true, lettuce: true, bread: true },
        }
    }

    pub fn needs(self, ingredient: Ingredient) -> bool {
        self.contents().has(ingredient)
    }

    /// Key events that make up one served burger of this type.
    pub fn key_events(self) -> &'static [KeyEvent] {
        use KeyEvent::*;
        match self {
            Burger::BeefBurger => &[CookBeef, UseBeef, UseBread, UsePlate, Serve],
            Burger::LettuceBurger => &[PrepareLettuce, UseLettuce, UseBread, UsePlate, Serve],
            Burger::BeefLettuceBurger => {
                &[CookBeef, UseBeef, PrepareLettuce, UseLettuce, UseBread, UsePlate, Serve]
            }
        }
    }
}

impl fmt::Display for Burger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ingredients stacked on a plate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlateContents {
    pub beef: bool,
    pub lettuce: bool,
    pub bread: bool,
}

impl PlateContents {
    pub fn has(self, ingredient: Ingredient) -> bool {
        match ingredient {
            Ingredient::Beef => self.beef,
            Ingredient::Lettuce => self.lettuce,
            Ingredient::Bread => self.bread,
        }
    }

    pub fn with(mut self, ingredient: Ingredient) -> Self {
        match ingredient {
            Ingredient::Beef => self.beef = true,
            Ingredient::Lettuce => self.lettuce = true,
            Ingredient::Bread => self.bread = true,
        }
        self
    }

    pub fn is_empty(self) -> bool {
        !(self.beef || self.lettuce || self.bread)
    }

    /// True when every ingredient here is also in `other`.
    pub fn is_subset_of(self, other: PlateContents) -> bool {
        (!self.beef || other.beef) && (!self.lettuce || other.lettuce) && (!self.bread || other.bread)
    }

    pub fn missing_for(self, burger: Burger) -> impl Iterator<Item = Ingredient> {
        let target = burger.contents();
        Ingredient::ALL
            .into_iter()
            .filter(move |&i| target.has(i) && !self.has(i))
    }

    pub fn burger(self) -> Option<Burger> {
        Burger::ALL.iter().copied().find(|b| b.contents() == self)
    }

    /// The catalog entry a plate with these contents is counted under.
    pub fn key(self) -> ObjectKey {
        use ObjectName as N;
        use ObjectStatus as S;
        match (self.beef, self.lettuce, self.bread) {
            (false, false, false) => ObjectKey::new(N::Plate, S::Empty),
            (true, false, false) => ObjectKey::new(N::Beef, S::WellCooked),
            (false, true, false) => ObjectKey::new(N::Lettuce, S::Chopped),
            (false, false, true) => ObjectKey::new(N::Bread, S::None),
            (true, true, false) => ObjectKey::new(N::BeefLettuce, S::None),
            (true, false, true) => ObjectKey::new(N::BeefBurger, S::None),
            (false, true, true) => ObjectKey::new(N::LettuceBurger, S::None),
            (true, true, true) => ObjectKey::new(N::BeefLettuceBurger, S::None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeefStatus {
    Fresh,
    InProgress,
    WellCooked,
    Overcooked,
}

impl BeefStatus {
    pub fn object_status(self) -> ObjectStatus {
        match self {
            BeefStatus::Fresh => ObjectStatus::Fresh,
            BeefStatus::InProgress => ObjectStatus::InProgress,
            BeefStatus::WellCooked => ObjectStatus::WellCooked,
            BeefStatus::Overcooked => ObjectStatus::Overcooked,
        }
    }
}

/// Milestones of a burger's life, attributed to whoever's interact completed them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KeyEvent {
    CookBeef,
    UseBeef,
    PrepareLettuce,
    UseLettuce,
    UseBread,
    UsePlate,
    Serve,
}

/// Key events already claimed along an item's lineage. Each event is recorded once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Credits(pub Vec<(KeyEvent, PlayerId)>);

impl Credits {
    pub fn record(&mut self, event: KeyEvent, player: PlayerId) -> bool {
        if self.0.iter().any(|(e, _)| *e == event) {
            return false;
        }
        self.0.push((event, player));
        self.0.sort();
        true
    }

    pub fn merge(&mut self, other: &Credits) {
        for &(e, p) in &other.0 {
            self.record(e, p);
        }
    }

    pub fn contains(&self, event: KeyEvent) -> bool {
        self.0.iter().any(|(e, _)| *e == event)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    /// `elapsed` counts ticks spent in the current cooking phase.
    Beef { status: BeefStatus, elapsed: u32 },
    Lettuce { chopped: bool, chops: u32 },
    Bread,
    Plate(PlateContents),
    FireExtinguisher,
}

/// A movable object in the kitchen.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub kind: ItemKind,
    pub credits: Credits,
}

impl Item {
    pub fn new(kind: ItemKind) -> Self {
        Item { kind, credits: Credits::default() }
    }

    pub fn fresh_beef() -> Self {
        Item::new(ItemKind::Beef { status: BeefStatus::Fresh, elapsed: 0 })
    }

    pub fn lettuce() -> Self {
        Item::new(ItemKind::Lettuce { chopped: false, chops: 0 })
    }

    pub fn bread() -> Self {
        Item::new(ItemKind::Bread)
    }

    pub fn plate(contents: PlateContents) -> Self {
        Item::new(ItemKind::Plate(contents))
    }

    pub fn extinguisher() -> Self {
        Item::new(ItemKind::FireExtinguisher)
    }

    /// Catalog entry this item is counted under.
    pub fn key(&self) -> ObjectKey {
        use ObjectName as N;
        use ObjectStatus as S;
        match &self.kind {
            ItemKind::Beef { status, .. } => ObjectKey::new(N::Beef, status.object_status()),
            ItemKind::Lettuce { chopped: true, .. } => ObjectKey::new(N::Lettuce, S::Chopped),
            ItemKind::Lettuce { chopped: false, .. } => ObjectKey::new(N::Lettuce, S::Unchopped),
            ItemKind::Bread => ObjectKey::new(N::Bread, S::None),
            ItemKind::Plate(c) => c.key(),
            ItemKind::FireExtinguisher => ObjectKey::new(N::FireExtinguisher, S::None),
        }
    }

    /// Ingredient that can be stacked onto a plate, if this item is one.
    pub fn as_ingredient(&self) -> Option<Ingredient> {
        match self.kind {
            ItemKind::Beef { status: BeefStatus::WellCooked, .. } => Some(Ingredient::Beef),
            ItemKind::Lettuce { chopped: true, .. } => Some(Ingredient::Lettuce),
            ItemKind::Bread => Some(Ingredient::Bread),
            _ => None,
        }
    }

    pub fn plate_contents(&self) -> Option<PlateContents> {
        match self.kind {
            ItemKind::Plate(c) => Some(c),
            _ => None,
        }
    }

    pub fn burger(&self) -> Option<Burger> {
        self.plate_contents().and_then(PlateContents::burger)
    }

    /// Raw component units `[beef, lettuce, bread, plate, extinguisher]` carried by this item.
    pub fn components(&self) -> [u32; 5] {
        match &self.kind {
            ItemKind::Beef { .. } => [1, 0, 0, 0, 0],
            ItemKind::Lettuce { .. } => [0, 1, 0, 0, 0],
            ItemKind::Bread => [0, 0, 1, 0, 0],
            ItemKind::Plate(c) => [c.beef as u32, c.lettuce as u32, c.bread as u32, 1, 0],
            ItemKind::FireExtinguisher => [0, 0, 0, 0, 1],
        }
    }

    /// Cooking or chopping progress in `[0, 1]`, when either is underway.
    pub fn progress(&self, cook_ticks: u32, overcook_ticks: u32, chop_interacts: u32) -> Option<f32> {
        match self.kind {
            ItemKind::Beef { status: BeefStatus::InProgress, elapsed } => {
                Some((elapsed as f32 / cook_ticks.max(1) as f32).min(1.0))
            }
            ItemKind::Beef { status: BeefStatus::WellCooked, elapsed } if elapsed > 0 => {
                Some((elapsed as f32 / overcook_ticks.max(1) as f32).min(1.0))
            }
            ItemKind::Lettuce { chopped: false, chops } if chops > 0 => {
                Some((chops as f32 / chop_interacts.max(1) as f32).min(1.0))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.key().fmt(f)
    }
}
