//! Fire-and-forward protocols: a node either fires (sends its own rumor) or
//! forwards the rumor it received in the previous step. A node that decides
//! to fire right after receiving a rumor sends nothing; it stays in the
//! transmit state, so under half duplex it cannot receive either.

use alloc::boxed::Box;
use alloc::sync::Arc;

use rand::Rng;

use super::{NodeInit, NodeProtocol, Protocol};
use crate::engine::{Action, DuplexMode, Message, MessageModel, NodeView, RumorId};
use crate::rng::NodeRng;
use crate::selectors::{build_disperser, Disperser};
use crate::verify::FiringSchedule;

/// Rumor received in the previous step, if any.
#[derive(Debug, Clone, Copy, Default)]
struct Relay {
    last: Option<(u64, RumorId)>,
}

impl Relay {
    fn pending(&self, t: u64) -> Option<RumorId> {
        match self.last {
            Some((s, r)) if s + 1 == t => Some(r),
            _ => None,
        }
    }

    fn action(&self, t: u64, fire: bool, own: RumorId) -> Action {
        match (fire, self.pending(t)) {
            (true, None) => Action::Transmit(Message::Fnf { rumor: own }),
            (true, Some(_)) => Action::Mute,
            (false, Some(r)) => Action::Transmit(Message::Fnf { rumor: r }),
            (false, None) => Action::Listen,
        }
    }

    fn receive(&mut self, step: u64, message: &Message) {
        if let Some(r) = message.single_rumor() {
            self.last = Some((step, r));
        }
    }
}

/// Oblivious protocol given by an explicit firing schedule. Labels outside
/// the schedule never fire and only forward.
#[derive(Debug, Clone)]
pub struct Scheduled {
    schedule: Arc<FiringSchedule>,
}

pub fn scheduled(schedule: FiringSchedule) -> Scheduled {
    Scheduled { schedule: Arc::new(schedule) }
}

impl Scheduled {
    pub fn schedule(&self) -> &FiringSchedule {
        &self.schedule
    }
}

impl Protocol for Scheduled {
    fn id(&self) -> &str {
        "scheduled"
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::FireAndForward
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        Box::new(ScheduledNode { schedule: self.schedule.clone(), label: init.label, relay: Relay::default() })
    }

    fn horizon(&self, n: usize) -> u64 {
        self.schedule.horizon + n as u64
    }
}

struct ScheduledNode {
    schedule: Arc<FiringSchedule>,
    label: usize,
    relay: Relay,
}

impl NodeProtocol for ScheduledNode {
    fn act(&mut self, view: &NodeView) -> Action {
        let fire = self.schedule.fires_at(self.label, view.time);
        self.relay.action(view.time, fire, view.own_rumor)
    }

    fn on_receive(&mut self, step: u64, message: &Message) {
        self.relay.receive(step, message);
    }
}

/// Deterministic oblivious protocol built from a disperser.
///
/// Labels are cut into batches of `m` consecutive labels. Batch `q` owns the
/// phase `[q·s′, (q+1)·s′)` with `s′ = s + n`; the `j`-th label of the batch
/// fires at `q·s′ + τ` for every `τ ∈ D_j`. The last `n` steps of a phase let
/// the last firings drain to the root.
#[derive(Debug, Clone)]
pub struct MlsDTree {
    disperser: Arc<Disperser>,
    inner: Scheduled,
}

pub fn mls_dtree(n: usize, mode: DuplexMode) -> MlsDTree {
    let n = n.max(1);
    let disperser = build_disperser(n, mode);
    let m = disperser.m;
    let phase = disperser.s + n as u64;
    let batches = n.div_ceil(m) as u64;
    let fires = (0..n)
        .map(|label| {
            let start = (label / m) as u64 * phase;
            disperser.sets[label % m].iter().map(|&tau| start + tau).collect()
        })
        .collect();
    let schedule = FiringSchedule::new(n, batches * phase, fires).expect("firings lie inside their phase");
    MlsDTree { disperser: Arc::new(disperser), inner: scheduled(schedule) }
}

impl MlsDTree {
    pub fn disperser(&self) -> &Disperser {
        &self.disperser
    }

    /// `s′ = s + n`.
    pub fn phase_len(&self) -> u64 {
        self.disperser.s + self.disperser.n as u64
    }

    pub fn batches(&self) -> u64 {
        self.disperser.n.div_ceil(self.disperser.m) as u64
    }

    /// `⌈n/m⌉·s′`.
    pub fn completion_bound(&self) -> u64 {
        self.batches() * self.phase_len()
    }

    pub fn schedule(&self) -> &FiringSchedule {
        self.inner.schedule()
    }
}

impl Protocol for MlsDTree {
    fn id(&self) -> &str {
        "mls"
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::FireAndForward
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        self.inner.instantiate(init)
    }

    fn horizon(&self, _n: usize) -> u64 {
        self.completion_bound()
    }
}

/// Randomized label-less protocol: every step each node decides to fire
/// with probability `1/n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RTree;

pub fn rtree() -> RTree {
    RTree
}

impl Protocol for RTree {
    fn id(&self) -> &str {
        "rtree"
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::FireAndForward
    }

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol> {
        Box::new(RTreeNode { rng: init.rng, n: init.n, relay: Relay::default() })
    }

    fn horizon(&self, n: usize) -> u64 {
        let n = n.max(2) as f64;
        libm::ceil(20.0 * n * libm::log(n)) as u64 + n as u64
    }
}

struct RTreeNode {
    rng: NodeRng,
    n: usize,
    relay: Relay,
}

impl NodeProtocol for RTreeNode {
    fn act(&mut self, view: &NodeView) -> Action {
        // draw every step so the stream does not depend on what was received
        let fire = self.rng.gen_range(0..self.n) == 0;
        self.relay.action(view.time, fire, view.own_rumor)
    }

    fn on_receive(&mut self, step: u64, message: &Message) {
        self.relay.receive(step, message);
    }
}

/// Never fires; forwards whatever it receives.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

pub fn silent() -> Silent {
    Silent
}

impl Protocol for Silent {
    fn id(&self) -> &str {
        "silent"
    }

    fn message_model(&self) -> MessageModel {
        MessageModel::FireAndForward
    }

    fn instantiate(&self, _init: NodeInit) -> Box<dyn NodeProtocol> {
        Box::new(ScheduledNode {
            schedule: Arc::new(FiringSchedule::empty(0, 0)),
            label: 0,
            relay: Relay::default(),
        })
    }

    fn horizon(&self, n: usize) -> u64 {
        n as u64
    }
}
