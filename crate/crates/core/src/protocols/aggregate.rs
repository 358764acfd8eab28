//! Deterministic gathering with aggregated (unbounded) messages.
//!
//! Both protocols start with `n` steps of child discovery in which the node
//! labelled `t` transmits alone at step `t`, so every node learns the labels
//! of its children. Time is then split into rounds. A node is *dormant* until
//! it has heard from every child, then *active* for `n` rounds, then
//! *retired*. While active it sends everything it holds:
//!
//! * `unb1`: rounds of two steps, RR and All. All-steps every active round,
//!   RR-step when `label = s mod n`.
//! * `unb2`: rounds of three steps, RR, All and Sel. All-steps and Sel-steps
//!   only during the first `m` active rounds (Sel when `label ∈ F_{s mod m}`
//!   for a strong κ-selective family of size `m`); the node is *semi-retired*
//!   for the remaining active rounds.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{floor_log2, NodeInit, NodeProtocol, NodeSnapshot, Phase, Protocol, ProtocolError};
use crate::engine::{Action, Aux, Message, MessageModel, NodeView, RumorSet};
use crate::selectors::{build_selective_family, SelectiveFamily};

/// Round layout and activity windows shared by the aggregation protocols and
/// the preprocessing of the bounded protocol.
#[derive(Debug, Clone)]
pub(crate) struct RoundPlan {
    pub n: usize,
    /// Steps per round: 2 (RR, All) or 3 (RR, All, Sel).
    pub steps_per_round: u64,
    /// Number of active rounds with All/Sel transmissions.
    pub burst_rounds: u64,
    /// `membership[label]` = ascending indices of the selector sets holding
    /// the label; empty when there is no Sel-step.
    pub membership: Arc<Vec<Vec<usize>>>,
    pub family_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Discovery,
    Rr,
    All,
    Sel,
}

impl RoundPlan {
    pub fn unb1(n: usize) -> Self {
        RoundPlan { n, steps_per_round: 2, burst_rounds: n as u64, membership: Arc::new(Vec::new()), family_size: 0 }
    }

    pub fn unb2(n: usize, family: &SelectiveFamily) -> Self {
        RoundPlan {
            n,
            steps_per_round: 3,
            burst_rounds: family.m() as u64,
            membership: Arc::new(family.membership()),
            family_size: family.m(),
        }
    }

    /// Length of the child-discovery preprocessing.
    pub fn offset(&self) -> u64 {
        self.n as u64
    }

    /// `(round, slot)` of step `t`.
    pub fn locate(&self, t: u64) -> (u64, Slot) {
        if t < self.offset() {
            return (0, Slot::Discovery);
        }
        let r = t - self.offset();
        let slot = match r % self.steps_per_round {
            0 => Slot::Rr,
            1 => Slot::All,
            _ => Slot::Sel,
        };
        (r / self.steps_per_round, slot)
    }

    /// First step of round `s`.
    pub fn round_start(&self, s: u64) -> u64 {
        self.offset() + s * self.steps_per_round
    }

    /// Upper bound on the activation round of every node.
    ///
    /// With a burst window of `n` rounds, a node of 2-height `h` activates by
    /// round `2nh + n − 1` (nodes of lower height have retired by then and the
    /// All-steps walk up its height-`h` path one node per round). With a
    /// shorter burst window the bound follows the κ-layer argument: each of
    /// the at most `⌊log_κ n⌋ + 1` layers needs at most `3n + (⌊log₂ n⌋+1)·m`
    /// rounds.
    pub fn activation_bound(&self, kappa: usize) -> u64 {
        let n = self.n as u64;
        let log2 = floor_log2(self.n);
        if self.burst_rounds >= n {
            return 2 * n * log2 + n;
        }
        let mut layers = 1;
        let mut pow = kappa.max(2) as u64;
        while pow <= n {
            layers += 1;
            pow *= kappa.max(2) as u64;
        }
        layers * (3 * n + (log2 + 1) * self.burst_rounds)
    }

    pub fn in_family_set(&self, label: usize, round: u64) -> bool {
        self.family_size > 0
            && self.membership[label].binary_search(&((round % self.family_size as u64) as usize)).is_ok()
    }
}

/// Per-node bookkeeping common to the aggregation schedules: which children
/// exist, which have been heard from after discovery, and the activation round.
#[derive(Debug, Clone)]
pub(crate) struct Activation {
    children: Vec<usize>,
    heard: Vec<bool>,
    heard_count: usize,
    last_heard_step: Option<u64>,
    pub alpha: Option<u64>,
}

impl Activation {
    pub fn new() -> Self {
        Activation { children: Vec::new(), heard: Vec::new(), heard_count: 0, last_heard_step: None, alpha: None }
    }

    /// Records a message from child `sender` received at `step`. Returns true
    /// if the sender is a child seen for the first time since discovery.
    pub fn record(&mut self, plan: &RoundPlan, step: u64, sender: usize) -> bool {
        if step < plan.offset() {
            if !self.children.contains(&sender) {
                self.children.push(sender);
                self.heard.push(false);
            }
            return false;
        }
        match self.children.iter().position(|&c| c == sender) {
            Some(i) if !self.heard[i] => {
                self.heard[i] = true;
                self.heard_count += 1;
                self.last_heard_step = Some(step);
                true
            }
            _ => false,
        }
    }

    /// Resolves the activation round once discovery is over and every child
    /// has been heard.
    pub fn update(&mut self, plan: &RoundPlan, time: u64) {
        self.alpha = self.alpha_at(plan, time);
    }

    /// Activation round as known at `time`, given the messages received
    /// before it.
    pub fn alpha_at(&self, plan: &RoundPlan, time: u64) -> Option<u64> {
        if self.alpha.is_some() || time < plan.offset() || self.heard_count < self.children.len() {
            return self.alpha;
        }
        Some(match self.last_heard_step {
            None => 0,
            Some(t) => plan.locate(t).0 + 1,
        })
    }

    /// Phase in the round containing step `time`.
    pub fn phase_at(&self, plan: &RoundPlan, time: u64) -> Phase {
        Self::phase_of(self.alpha_at(plan, time), plan, plan.locate(time).0)
    }

    pub fn phase(&self, plan: &RoundPlan, round: u64) -> Phase {
        Self::phase_of(self.alpha, plan, round)
    }

    fn phase_of(alpha: Option<u64>, plan: &RoundPlan, round: u64) -> Phase {
        match alpha {
            None => Phase::Dormant,
            Some(a) if round < a => Phase::Dormant,
            Some(a) if round < a + plan.burst_rounds => Phase::Active,
            Some(a) if round < a + plan.n as u64 => Phase::SemiRetired,
            Some(_) => Phase::Retired,
        }
    }

    /// Whether the node transmits in step `time` under `plan`.
    pub fn transmits(&mut self, plan: &RoundPlan, label: usize, time: u64) -> bool {
        self.update(plan, time);
        let (round, slot) = plan.locate(time);
        match slot {
            Slot::Discovery => time == label as u64,
            _ => match self.phase(plan, round) {
                Phase::Dormant | Phase::Retired => false,
                phase => match slot {
                    Slot::Rr => round % plan.n as u64 == label as u64,
                    Slot::All => phase == Phase::Active,
                    Slot::Sel => phase == Phase::Active && plan.in_family_set(label, round),
                    Slot::Discovery => unreachable!(),
                },
            },
        }
    }
}

/// `unb1` or `unb2`.
#[derive(Debug, Clone)]
pub struct AggregationProtocol {
    id: &'static str,
    plan: RoundPlan,
    kappa: usize,
}

pub fn unb_dtree1(n: usize) -> AggregationProtocol {
    AggregationProtocol { id: "unb1", plan: RoundPlan::unb1(n.max(1)), kappa: 2 }
}

/// κ = ⌈n^{1/3}⌉ unless overridden.
pub fn kappa_for(n: usize, kappa: Option<usize>) -> usize {
    kappa.unwrap_or_else(|| {
        let mut k = libm::round(libm::cbrt(n as f64)) as usize;
        while k.pow(3) < n {
            k += 1;
        }
        while k > 1 && (k - 1).pow(3) >= n {
            k -= 1;
        }
        k.max(1)
    })
}

/// Strong κ-selective family for the Sel-steps, replaced by the singletons
/// whenever it would need more than `n` sets.
pub(crate) fn selector_family(n: usize, kappa: usize, seed: u64) -> Result<SelectiveFamily, ProtocolError> {
    if kappa == 0 || kappa > n {
        return Err(ProtocolError::MissingSelectiveFamily { n, kappa });
    }
    let mut family = build_selective_family(n, kappa, seed);
    if family.m() > n {
        family = build_selective_family(n, n, seed);
    }
    Ok(family)
}

pub fn unb_dtree2(n: usize, kappa: Option<usize>, family_seed: u64) -> Result<AggregationProtocol, ProtocolError> {
    let n = n.max(1);
    let kappa = kappa_for(n, kappa);
    let family = selector_family(n, kappa, family_seed)?;
    Ok(AggregationProtocol { id: "unb2", plan: RoundPlan::unb2(n, &family), kappa })
}

impl AggregationProtocol {
    pub fn steps_per_round(&self) -> u64 {
        self.plan.steps_per_round
    }

    /// Length of the child-discovery preprocessing in steps.
    pub fn preprocessing_steps(&self) -> u64 {
        self.plan.offset()
    }

    /// Size of the selector family (0 for `unb1`).
    pub fn family_size(&self) -> usize {
        self.plan.family_size
    }
}

impl Protocol for AggregationProtocol {
    fn id(&self) -> &str {
        self.id
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::Unbounded
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        debug_assert_eq!(init.n, self.plan.n, "protocol built for a different n");
        let mut held = RumorSet::new(init.n);
        held.insert(init.label);
        Box::new(AggregationNode {
            plan: self.plan.clone(),
            label: init.label,
            held,
            activation: Activation::new(),
            next_step: 0,
        })
    }

    fn horizon(&self, n: usize) -> u64 {
        // the root holds everything once activated
        let plan = RoundPlan { n: n.max(1), ..self.plan.clone() };
        plan.round_start(plan.activation_bound(self.kappa) + 1)
    }
}

struct AggregationNode {
    plan: RoundPlan,
    label: usize,
    held: RumorSet,
    activation: Activation,
    next_step: u64,
}

impl NodeProtocol for AggregationNode {
    fn act(&mut self, view: &NodeView) -> Action {
        self.next_step = view.time + 1;
        if self.activation.transmits(&self.plan, self.label, view.time) {
            Action::Transmit(Message::Unbounded { rumors: self.held.clone(), aux: Aux::from_sender(self.label) })
        } else {
            Action::Listen
        }
    }

    fn on_receive(&mut self, step: u64, message: &Message) {
        if let Message::Unbounded { rumors, aux } = message {
            self.held.union_with(rumors);
            if let Some(sender) = aux.sender {
                self.activation.record(&self.plan, step, sender);
            }
        }
        self.activation.update(&self.plan, step + 1);
    }

    fn snapshot(&self) -> NodeSnapshot {
        // phase in the round of the upcoming step
        NodeSnapshot {
            phase: Some(self.activation.phase_at(&self.plan, self.next_step)),
            activation_round: self.activation.alpha_at(&self.plan, self.next_step),
            held: Some(self.held.len()),
            ..NodeSnapshot::default()
        }
    }
}
