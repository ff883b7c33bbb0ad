use serde::{Deserialize, Serialize};

use crate::item::{Burger, Credits, KeyEvent, ObjectKey, PlayerId};
use crate::layout::Pos;

pub const WRONG_SERVE_PENALTY: i32 = -10;
pub const MISSED_ORDER_PENALTY: i32 = -10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameEvent {
    pub tick: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    Delivery { player: PlayerId, burger: Burger, order_id: u32, reward: i32, credits: Credits },
    WrongServe { player: PlayerId, item: ObjectKey, reward: i32 },
    MissedOrder { burger: Burger, order_id: u32, reward: i32 },
    OrderPlaced { burger: Burger, order_id: u32, remain_time: u32 },
    FireStarted { pan: Pos },
    FireExtinguished { pan: Pos, player: PlayerId },
    ItemCreated { player: PlayerId, item: ObjectKey, at: Pos },
    ItemDestroyed { player: Option<PlayerId>, item: ObjectKey, cause: DestroyCause },
    KeyAction { player: PlayerId, event: KeyEvent },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DestroyCause {
    Trash,
    FireCleanup,
}

impl GameEvent {
    /// Score change carried by this event.
    pub fn reward(&self) -> i32 {
        match self.kind {
            EventKind::Delivery { reward, .. }
            | EventKind::WrongServe { reward, .. }
            | EventKind::MissedOrder { reward, .. } => reward,
            _ => 0,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(
            self.kind,
            EventKind::MissedOrder { .. } | EventKind::WrongServe { .. } | EventKind::FireStarted { .. }
        )
    }
}
