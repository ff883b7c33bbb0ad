use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::state::GameState;
use crate::item::{Burger, ObjectKey, PlayerId, CATALOG};

/// Counts per catalog entry, in [`CATALOG`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectCounts(pub [u32; CATALOG.len()]);

impl ObjectCounts {
    pub fn get(&self, key: ObjectKey) -> u32 {
        key.index().map(|i| self.0[i]).unwrap_or(0)
    }

    pub fn add(&mut self, key: ObjectKey, n: u32) {
        if let Some(i) = key.index() {
            self.0[i] += n;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectKey, u32)> + '_ {
        CATALOG.iter().copied().zip(self.0.iter().copied())
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderView {
    pub name: Burger,
    pub remain_time: u32,
}

/// What an agent sees: a census of the kitchen from one seat's point of view.
///
/// Items held by other players are listed under `inventory_other_player` and left
/// out of `objects`; everything else (including the viewer's own hands and plated
/// ingredients) is counted in `objects`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateDocument {
    pub objects: ObjectCounts,
    /// Number of counter cells with nothing on them (the `"Empty"` key).
    pub counters_empty: u32,
    pub orders: Vec<OrderView>,
    pub inventory_other_player: Vec<(String, ObjectKey)>,
}

pub fn player_key(id: PlayerId) -> String {
    format!("player_{id}")
}

impl GameState {
    pub fn snapshot_document(&self, viewer: PlayerId) -> StateDocument {
        let mut objects = ObjectCounts::default();
        let mut counters_empty = 0;
        for (i, slot) in self.slots.iter().enumerate() {
            if let Some(item) = slot {
                objects.add(item.key(), 1);
            } else if self.layout.cells[i].is_counter() {
                counters_empty += 1;
            }
            if self.fires[i] {
                objects.add(ObjectKey::new(crate::item::ObjectName::Fire, crate::item::ObjectStatus::None), 1);
            }
        }
        let mut inventory_other_player = Vec::new();
        for (id, p) in self.players.iter().enumerate() {
            let Some(item) = &p.held else { continue };
            if id == viewer {
                objects.add(item.key(), 1);
            } else {
                inventory_other_player.push((player_key(id), item.key()));
            }
        }
        StateDocument {
            objects,
            counters_empty,
            orders: self.orders.iter().map(|o| OrderView { name: o.burger, remain_time: o.remain_time }).collect(),
            inventory_other_player,
        }
    }
}

impl StateDocument {
    /// Python-literal rendering in the layout agents are prompted with.
    pub fn to_literal(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n    \"objects\": {\n");
        let n = CATALOG.len();
        for (i, (key, count)) in self.objects.iter().enumerate() {
            let sep = if i + 1 < n { "," } else { "" };
            let _ = writeln!(s, "        {key}: {count}{sep}");
        }
        s.push_str("    },\n    \"counters\": {\n");
        let _ = writeln!(s, "        \"Empty\": {},", self.counters_empty);
        s.push_str("    },\n    \"orders\": [");
        if self.orders.is_empty() {
            s.push_str("],\n");
        } else {
            s.push('\n');
            for (i, o) in self.orders.iter().enumerate() {
                let sep = if i + 1 < self.orders.len() { "," } else { "" };
                let _ = write!(
                    s,
                    "        {{\n            \"name\": \"{}\",\n            \"remain_time\": {}\n        }}{sep}\n",
                    o.name.as_str(),
                    o.remain_time
                );
            }
            s.push_str("    ],\n");
        }
        s.push_str("    \"inventory_other_player\": {");
        if self.inventory_other_player.is_empty() {
            s.push_str("}\n");
        } else {
            s.push('\n');
            for (id, key) in &self.inventory_other_player {
                let _ = writeln!(s, "        \"{id}\": {key},");
            }
            s.push_str("    }\n");
        }
        s.push('}');
        s
    }
}
