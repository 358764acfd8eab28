//! Synchronous execution of a protocol on a tree over a collision channel
//! without collision detection.
//!
//! In each step every node either listens or transmits. A node `u` receives
//! the message of its child `c` iff `c` is the only child of `u` transmitting
//! in that step and, under [`DuplexMode::Half`], `u` itself is not in the
//! transmit state. Collisions and silence look the same to the receiver: in
//! both cases the node's protocol state is simply not called back.

mod message;
mod trace;
mod tree;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

pub use message::{Action, Aux, Message, MessageModel, RumorId, RumorSet};
pub use trace::{Reception, StepRecord, Trace};
pub use tree::{build_tree, RawTree, Tree, TreeError};

use crate::protocols::{NodeInit, NodeProtocol, Protocol};
use crate::rng::node_rng;

/// Whether a node may receive in a step where it is in the transmit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DuplexMode {
    Full,
    #[default]
    Half,
}

/// What a node's protocol state may look at when choosing its action.
///
/// Messages received earlier were handed to the state through
/// [`NodeProtocol::on_receive`], in order; there is no other channel of
/// information, in particular nothing about the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeView {
    pub label: usize,
    pub n: usize,
    pub time: u64,
    pub own_rumor: RumorId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("node {node} sent a {found:?} message under the {model:?} model at step {step}")]
    ProtocolViolatedMessageBound { node: usize, step: u64, model: MessageModel, found: MessageModel },
    #[error("node {node} sent rumor {rumor} at step {step}, which is neither its own nor the one received at the previous step")]
    FireAndForwardViolation { node: usize, step: u64, rumor: RumorId },
}

/// Outcome of one channel step at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Silence,
    Received { from: usize },
}

/// Per-node reception outcomes of one step plus the set of collision sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub outcomes: Vec<Outcome>,
    pub collisions: Vec<usize>,
}

/// Resolves one step of the channel. `actions[v]` is node `v`'s action.
pub fn step(tree: &Tree, mode: DuplexMode, actions: &[Action]) -> StepResult {
    let n = tree.n();
    debug_assert_eq!(actions.len(), n);
    // number of transmitting children, and the last one seen
    let mut count = vec![0u32; n];
    let mut sender = vec![usize::MAX; n];
    for v in 0..n {
        if v != tree.root() && matches!(actions[v], Action::Transmit(_)) {
            let p = tree.parent(v);
            count[p] += 1;
            sender[p] = v;
        }
    }
    let mut outcomes = Vec::with_capacity(n);
    let mut collisions = Vec::new();
    for u in 0..n {
        if count[u] >= 2 {
            collisions.push(u);
        }
        let busy = !matches!(actions[u], Action::Listen);
        let hears = count[u] == 1 && (mode == DuplexMode::Full || !busy);
        outcomes.push(if hears { Outcome::Received { from: sender[u] } } else { Outcome::Silence });
    }
    StepResult { outcomes, collisions }
}

/// Options for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub mode: DuplexMode,
    pub max_steps: u64,
    pub seed: u64,
    /// Keep going after every rumor reached the root.
    pub run_to_max: bool,
    /// Record per-step transmissions, receptions and collisions.
    pub record_steps: bool,
}

impl RunConfig {
    pub fn new(mode: DuplexMode, max_steps: u64, seed: u64) -> Self {
        RunConfig { mode, max_steps, seed, run_to_max: false, record_steps: false }
    }

    pub fn recording(mut self) -> Self {
        self.record_steps = true;
        self
    }

    pub fn to_max(mut self) -> Self {
        self.run_to_max = true;
        self
    }
}

/// A simulation in progress: the tree, one protocol state per node and the
/// trace accumulated so far. [`run`] drives it to completion; inspectors in
/// tests step it manually to look at node states between steps.
pub struct Simulation<'t> {
    tree: &'t Tree,
    config: RunConfig,
    model: MessageModel,
    states: Vec<Box<dyn NodeProtocol>>,
    // rumor each node received in the previous step (fire-and-forward check)
    last_rx: Vec<Option<RumorId>>,
    time: u64,
    trace: Trace,
    delivered: RumorSet,
}

impl<'t> Simulation<'t> {
    pub fn new(protocol: &dyn Protocol, tree: &'t Tree, config: RunConfig) -> Self {
        let n = tree.n();
        let states = (0..n)
            .map(|v| {
                protocol.instantiate(NodeInit { label: tree.label(v), n, rng: node_rng(config.seed, v) })
            })
            .collect();
        let root_rumor = tree.label(tree.root());
        let mut trace = Trace::new(n);
        trace.delivery[root_rumor] = Some(0);
        Simulation {
            tree,
            config,
            model: protocol.message_model(),
            states,
            last_rx: vec![None; n],
            time: 0,
            trace,
            delivered: RumorSet::singleton(n, root_rumor),
        }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn tree(&self) -> &Tree {
        self.tree
    }

    pub fn states(&self) -> &[Box<dyn NodeProtocol>] {
        &self.states
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn all_delivered(&self) -> bool {
        self.delivered.len() == self.tree.n()
    }

    pub fn finished(&self) -> bool {
        self.time >= self.config.max_steps || (!self.config.run_to_max && self.all_delivered())
    }

    /// Collects every node's action for the current step.
    fn actions(&mut self) -> Result<Vec<Action>, EngineError> {
        let n = self.tree.n();
        let mut actions = Vec::with_capacity(n);
        for v in 0..n {
            let view = NodeView {
                label: self.tree.label(v),
                n,
                time: self.time,
                own_rumor: self.tree.label(v),
            };
            let mut action = self.states[v].act(&view);
            if v == self.tree.root() {
                // the gathering target only listens
                action = Action::Listen;
            }
            if let Action::Transmit(m) = &action {
                if m.model() != self.model {
                    return Err(EngineError::ProtocolViolatedMessageBound {
                        node: v,
                        step: self.time,
                        model: self.model,
                        found: m.model(),
                    });
                }
                if let Message::Fnf { rumor } = *m {
                    if rumor != view.own_rumor && self.last_rx[v] != Some(rumor) {
                        return Err(EngineError::FireAndForwardViolation { node: v, step: self.time, rumor });
                    }
                }
            }
            actions.push(action);
        }
        Ok(actions)
    }

    /// Executes one step.
    pub fn advance(&mut self) -> Result<(), EngineError> {
        let actions = self.actions()?;
        let result = step(self.tree, self.config.mode, &actions);
        let t = self.time;
        let root = self.tree.root();
        let mut record = self.config.record_steps.then(|| StepRecord {
            step: t,
            transmitters: Vec::new(),
            receptions: Vec::new(),
            collisions: result.collisions.clone(),
        });
        self.trace.collisions_total += result.collisions.len() as u64;
        for (v, a) in actions.iter().enumerate() {
            if matches!(a, Action::Transmit(_)) {
                self.trace.transmissions_total += 1;
                if let Some(r) = record.as_mut() {
                    r.transmitters.push(v);
                }
            }
        }
        for (u, outcome) in result.outcomes.iter().enumerate() {
            self.last_rx[u] = None;
            if let Outcome::Received { from } = *outcome {
                let msg = actions[from].message().expect("receptions come from transmitters").clone();
                self.last_rx[u] = msg.single_rumor();
                if u == root {
                    for rumor in msg.rumors() {
                        if self.delivered.insert(rumor) {
                            self.trace.delivery[rumor] = Some(t + 1);
                        }
                    }
                }
                if let Some(r) = record.as_mut() {
                    r.receptions.push(Reception { node: u, from, message: msg.clone() });
                }
                self.states[u].on_receive(t, &msg);
            }
        }
        if let Some(r) = record {
            self.trace.steps.push(r);
        }
        self.time += 1;
        self.trace.steps_run = self.time;
        Ok(())
    }

    pub fn into_trace(mut self) -> Trace {
        self.trace.finalize();
        self.trace
    }
}

/// Runs `protocol` on `tree` until every rumor reached the root or
/// `config.max_steps` steps elapsed.
pub fn run(protocol: &dyn Protocol, tree: &Tree, config: RunConfig) -> Result<Trace, EngineError> {
    if config.max_steps == 0 {
        return Err(EngineError::NoSteps);
    }
    let mut sim = Simulation::new(protocol, tree, config);
    while !sim.finished() {
        sim.advance()?;
    }
    Ok(sim.into_trace())
}
