use alloc::boxed::Box;

use super::{NodeInit, NodeProtocol, NodeSnapshot, Protocol};
use crate::engine::{Action, Aux, Message, MessageModel, NodeView, RumorSet};

/// Cyclic schedule: step `t` belongs to label `t mod n`.
///
/// * Unbounded: the owner of the slot sends everything it holds.
/// * Bounded: whoever holds rumor `t mod n` and has not sent it yet sends it.
///   Holders of one rumor form a path, so only the topmost one transmits and
///   the channel never sees a collision on a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRobin {
    bounded: bool,
}

pub fn round_robin_unbounded() -> RoundRobin {
    RoundRobin { bounded: false }
}

pub fn round_robin_bounded() -> RoundRobin {
    RoundRobin { bounded: true }
}

impl Protocol for RoundRobin {
    fn id(&self) -> &str {
        if self.bounded {
            "rr-bnd"
        } else {
            "rr-unb"
        }
    }

    fn message_model(&self) -> MessageModel {
        if self.bounded {
            MessageModel::Bounded
        } else {
            MessageModel::Unbounded
        }
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        let mut held = RumorSet::new(init.n);
        held.insert(init.label);
        Box::new(RoundRobinNode { bounded: self.bounded, held, sent: RumorSet::new(init.n) })
    }

    fn horizon(&self, n: usize) -> u64 {
        (n as u64) * (n as u64)
    }
}

struct RoundRobinNode {
    bounded: bool,
    held: RumorSet,
    sent: RumorSet,
}

impl NodeProtocol for RoundRobinNode {
    fn act(&mut self, view: &NodeView) -> Action {
        let slot = (view.time % view.n as u64) as usize;
        if self.bounded {
            if self.held.contains(slot) && self.sent.insert(slot) {
                return Action::Transmit(Message::Bounded { rumor: slot, aux: Aux::default() });
            }
        } else if slot == view.label {
            return Action::Transmit(Message::Unbounded {
                rumors: self.held.clone(),
                aux: Aux::from_sender(view.label),
            });
        }
        Action::Listen
    }

    fn on_receive(&mut self, _step: u64, message: &Message) {
        for r in message.rumors() {
            self.held.insert(r);
        }
    }

    fn snapshot(&self) -> NodeSnapshot {
        NodeSnapshot { held: Some(self.held.len()), ..NodeSnapshot::default() }
    }
}
