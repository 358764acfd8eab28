//! Deterministic gathering with one rumor per message.
//!
//! Preprocessing runs the `unb2` schedule for a fixed number of rounds, but
//! every message carries only the sender's own rumor together with its label
//! and, once known, its 2-height. A node learns its height from those of its
//! children when it activates. The rumors carried by these messages are
//! discarded, which keeps the number of rumors travelling inside one phase
//! bounded by the size of the subtree that produced them.
//!
//! Then come `⌈log₂ n⌉ + 1` phases, phase `h` reserved for nodes of height
//! `h`. Nodes of one height form vertex-disjoint paths; in stage All every
//! path pipelines its rumors to its top node, in stage RR the top node hands
//! each rumor to its parent at the slot of that rumor.
//!
//! * Full duplex: stage All (`2n` steps), stage RR (`n` steps).
//! * Half duplex: a parity stage (`n` steps) in which a token walks up each
//!   path so every node learns the parity of its position, stage All (`4n`
//!   steps) in which even positions use even steps and odd positions odd
//!   steps, stage RR (`n` steps).

use alloc::boxed::Box;

use super::aggregate::{kappa_for, selector_family, Activation, RoundPlan};
use super::{ceil_log2, NodeInit, NodeProtocol, NodeSnapshot, Protocol, ProtocolError};
use crate::engine::{Action, Aux, DuplexMode, Message, MessageModel, NodeView, RumorId, RumorSet};

#[derive(Debug, Clone)]
pub struct BndDTree {
    plan: RoundPlan,
    kappa: usize,
    mode: DuplexMode,
    preprocessing: u64,
}

pub fn bnd_dtree(n: usize, mode: DuplexMode, kappa: Option<usize>, family_seed: u64) -> Result<BndDTree, ProtocolError> {
    let n = n.max(1);
    let kappa = kappa_for(n, kappa);
    let family = selector_family(n, kappa, family_seed)?;
    let plan = RoundPlan::unb2(n, &family);
    let preprocessing = plan.round_start(plan.activation_bound(kappa) + 1);
    Ok(BndDTree { plan, kappa, mode, preprocessing })
}

impl BndDTree {
    pub fn mode(&self) -> DuplexMode {
        self.mode
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Steps spent before phase 0.
    pub fn preprocessing_steps(&self) -> u64 {
        self.preprocessing
    }

    pub fn phase_len(&self) -> u64 {
        let n = self.plan.n as u64;
        match self.mode {
            DuplexMode::Full => 3 * n,
            DuplexMode::Half => 6 * n,
        }
    }

    /// Number of phases, `⌈log₂ n⌉ + 1`.
    pub fn phases(&self) -> u64 {
        ceil_log2(self.plan.n) + 1
    }

    /// First step of phase `h`.
    pub fn phase_start(&self, h: u64) -> u64 {
        self.preprocessing + h * self.phase_len()
    }
}

impl Protocol for BndDTree {
    fn id(&self) -> &str {
        "bnd"
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::Bounded
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        debug_assert_eq!(init.n, self.plan.n, "protocol built for a different n");
        Box::new(BndNode {
            layout: Layout {
                n: self.plan.n as u64,
                mode: self.mode,
                preprocessing: self.preprocessing,
                phase_len: self.phase_len(),
                phases: self.phases(),
            },
            plan: self.plan.clone(),
            label: init.label,
            activation: Activation::new(),
            child_heights: alloc::vec::Vec::new(),
            height: None,
            path_start: false,
            held: RumorSet::singleton(init.n, init.label),
            sent: RumorSet::new(init.n),
            parity: None,
            token_at: None,
            next_step: 0,
        })
    }

    fn horizon(&self, _n: usize) -> u64 {
        self.phase_start(self.phases())
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    n: u64,
    mode: DuplexMode,
    preprocessing: u64,
    phase_len: u64,
    phases: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Parity(u64),
    All(u64),
    Rr(RumorId),
}

impl Layout {
    /// `(phase, stage)` of a step after preprocessing.
    fn locate(&self, t: u64) -> Option<(u64, Stage)> {
        let r = t.checked_sub(self.preprocessing)?;
        let (h, k) = (r / self.phase_len, r % self.phase_len);
        if h >= self.phases {
            return None;
        }
        let n = self.n;
        let stage = match self.mode {
            DuplexMode::Full if k < 2 * n => Stage::All(k),
            DuplexMode::Full => Stage::Rr((k - 2 * n) as usize),
            DuplexMode::Half if k < n => Stage::Parity(k),
            DuplexMode::Half if k < 5 * n => Stage::All(k - n),
            DuplexMode::Half => Stage::Rr((k - 5 * n) as usize),
        };
        Some((h, stage))
    }
}

struct BndNode {
    layout: Layout,
    plan: RoundPlan,
    label: usize,
    activation: Activation,
    child_heights: alloc::vec::Vec<u32>,
    height: Option<u32>,
    // no child shares the node's height
    path_start: bool,
    held: RumorSet,
    // rumors already sent in stage All
    sent: RumorSet,
    parity: Option<bool>,
    // step at which the parity token arrived
    token_at: Option<u64>,
    next_step: u64,
}

impl BndNode {
    fn resolve_height(&mut self) {
        if self.height.is_some() || self.activation.alpha.is_none() {
            return;
        }
        let top = self.child_heights.iter().copied().max();
        let (h, start) = match top {
            None => (0, true),
            Some(g) => match self.child_heights.iter().filter(|&&x| x == g).count() {
                1 => (g, false),
                _ => (g + 1, true),
            },
        };
        self.height = Some(h);
        self.path_start = start;
    }

    fn preprocessing_action(&mut self, t: u64) -> Action {
        self.activation.update(&self.plan, t);
        self.resolve_height();
        if !self.activation.transmits(&self.plan, self.label, t) {
            return Action::Listen;
        }
        let aux = Aux { sender: Some(self.label), height: self.height, parity: None };
        Action::Transmit(Message::Bounded { rumor: self.label, aux })
    }

    fn phase_action(&mut self, t: u64, stage: Stage) -> Action {
        let h = self.height.expect("height known after preprocessing");
        let aux = Aux { height: Some(h), ..Aux::default() };
        match stage {
            Stage::Parity(k) => {
                let relay = if k == 0 && self.path_start {
                    self.parity = Some(false);
                    true
                } else {
                    k > 0 && self.token_at == Some(t - 1)
                };
                if relay {
                    let aux = Aux { parity: self.parity, ..aux };
                    return Action::Transmit(Message::Bounded { rumor: self.label, aux });
                }
            }
            Stage::All(k) => {
                let turn = match self.layout.mode {
                    DuplexMode::Full => true,
                    DuplexMode::Half => (k % 2 == 1) == self.parity.unwrap_or(false),
                };
                if turn {
                    if let Some(r) = self.held.iter().find(|&r| !self.sent.contains(r)) {
                        self.sent.insert(r);
                        return Action::Transmit(Message::Bounded { rumor: r, aux });
                    }
                }
            }
            Stage::Rr(u) => {
                if self.held.contains(u) {
                    return Action::Transmit(Message::Bounded { rumor: u, aux });
                }
            }
        }
        Action::Listen
    }
}

impl NodeProtocol for BndNode {
    fn act(&mut self, view: &NodeView) -> Action {
        let t = view.time;
        self.next_step = t + 1;
        if t < self.layout.preprocessing {
            return self.preprocessing_action(t);
        }
        match self.layout.locate(t) {
            Some((h, stage)) if Some(h) == self.height.map(u64::from) => self.phase_action(t, stage),
            _ => Action::Listen,
        }
    }

    fn on_receive(&mut self, step: u64, message: &Message) {
        let Message::Bounded { rumor, aux } = message else {
            return;
        };
        if step < self.layout.preprocessing {
            if let Some(sender) = aux.sender {
                if self.activation.record(&self.plan, step, sender) {
                    self.child_heights.push(aux.height.expect("active nodes know their height"));
                }
            }
            self.activation.update(&self.plan, step + 1);
            self.resolve_height();
            return;
        }
        if let Some(p) = aux.parity {
            if let Some((h, Stage::Parity(_))) = self.layout.locate(step) {
                if Some(h) == self.height.map(u64::from) {
                    self.parity = Some(!p);
                    self.token_at = Some(step);
                }
            }
            return;
        }
        self.held.insert(*rumor);
    }

    fn snapshot(&self) -> NodeSnapshot {
        let t = self.next_step.min(self.layout.preprocessing);
        NodeSnapshot {
            phase: Some(self.activation.phase_at(&self.plan, t)),
            activation_round: self.activation.alpha_at(&self.plan, t),
            pending: Some(self.held.len() - self.sent.len()),
            held: Some(self.held.len()),
            height: self.height,
            parity: self.parity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_layout() {
        let p = bnd_dtree(8, DuplexMode::Half, None, 0).unwrap();
        assert_eq!(p.phase_len(), 48);
        assert_eq!(p.phases(), 4);
        assert_eq!(p.horizon(8), p.preprocessing_steps() + 4 * 48);
        let l = Layout { n: 8, mode: DuplexMode::Half, preprocessing: 100, phase_len: 48, phases: 4 };
        assert_eq!(l.locate(99), None);
        assert_eq!(l.locate(100), Some((0, Stage::Parity(0))));
        assert_eq!(l.locate(108), Some((0, Stage::All(0))));
        assert_eq!(l.locate(140), Some((0, Stage::Rr(0))));
        assert_eq!(l.locate(148), Some((1, Stage::Parity(0))));
        assert_eq!(l.locate(100 + 4 * 48), None);
        let l = Layout { mode: DuplexMode::Full, phase_len: 24, ..l };
        assert_eq!(l.locate(115), Some((0, Stage::All(15))));
        assert_eq!(l.locate(116), Some((0, Stage::Rr(0))));
    }
}
