//! Gathering protocols as per-node state machines.
//!
//! A [`Protocol`] is a factory: the engine asks it for one [`NodeProtocol`]
//! per node, handing over only the node's label, `n` and a private random
//! stream. From then on the state sees the current time through
//! [`NodeView`] and the messages it actually received through
//! [`NodeProtocol::on_receive`].

mod aggregate;
mod bounded;
mod fire_forward;
mod round_robin;

use alloc::boxed::Box;
use alloc::string::String;

pub use aggregate::{unb_dtree1, unb_dtree2, AggregationProtocol};
pub use bounded::{bnd_dtree, BndDTree};
pub use fire_forward::{mls_dtree, rtree, scheduled, silent, MlsDTree, RTree, Scheduled, Silent};
pub use round_robin::{round_robin_bounded, round_robin_unbounded, RoundRobin};

use crate::engine::{Action, DuplexMode, Message, MessageModel, NodeView};
use crate::rng::NodeRng;

/// Everything a node knows when it starts.
pub struct NodeInit {
    pub label: usize,
    pub n: usize,
    pub rng: NodeRng,
}

pub trait NodeProtocol: Send {
    fn act(&mut self, view: &NodeView) -> Action;

    /// Called after every step in which this node received a message.
    fn on_receive(&mut self, step: u64, message: &Message);

    /// Internal state exposed to test inspectors; never read by the engine.
    fn snapshot(&self) -> NodeSnapshot {
        NodeSnapshot::default()
    }
}

pub trait Protocol: Send + Sync {
    /// Short id used on the command line.
    fn id(&self) -> &str;

    fn message_model(&self) -> MessageModel;

    fn instantiate(&self, init: NodeInit) -> Box<dyn NodeProtocol>;

    /// Number of steps within which the protocol guarantees completion on
    /// every `n`-node tree; for randomized protocols a generous budget.
    fn horizon(&self, n: usize) -> u64;
}

/// Lifecycle of a node in the aggregation protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Dormant,
    Active,
    SemiRetired,
    Retired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeSnapshot {
    pub phase: Option<Phase>,
    /// Activation round, once known.
    pub activation_round: Option<u64>,
    /// Held rumors not yet transmitted in the current stage.
    pub pending: Option<usize>,
    /// Number of rumors held.
    pub held: Option<usize>,
    /// Computed 2-height.
    pub height: Option<u32>,
    /// Position parity along the node's path (half duplex only).
    pub parity: Option<bool>,
}

/// Tunables shared by [`by_id`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    pub mode: DuplexMode,
    /// Seed for the randomized selective-family construction.
    pub family_seed: u64,
    /// Overrides κ = ⌈n^{1/3}⌉ in the selective-family protocols.
    pub kappa: Option<usize>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams { mode: DuplexMode::Half, family_seed: 0, kappa: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown protocol id {0:?}")]
    Unknown(String),
    #[error("no selective family available for n = {n}, kappa = {kappa}")]
    MissingSelectiveFamily { n: usize, kappa: usize },
}

/// Protocol ids accepted by [`by_id`].
pub const PROTOCOL_IDS: [&str; 7] = ["rr-unb", "rr-bnd", "unb1", "unb2", "bnd", "mls", "rtree"];

/// Builds the protocol named `id` for networks of `n` nodes.
pub fn by_id(id: &str, n: usize, params: ProtocolParams) -> Result<Box<dyn Protocol>, ProtocolError> {
    Ok(match id {
        "rr-unb" => Box::new(round_robin_unbounded()),
        "rr-bnd" => Box::new(round_robin_bounded()),
        "unb1" => Box::new(unb_dtree1(n)),
        "unb2" => Box::new(unb_dtree2(n, params.kappa, params.family_seed)?),
        "bnd" => Box::new(bnd_dtree(n, params.mode, params.kappa, params.family_seed)?),
        "mls" => Box::new(mls_dtree(n, params.mode)),
        "rtree" => Box::new(rtree()),
        other => return Err(ProtocolError::Unknown(other.into())),
    })
}

/// `⌊log₂ n⌋` for `n ≥ 1`.
pub(crate) fn floor_log2(n: usize) -> u64 {
    (usize::BITS - 1 - n.max(1).leading_zeros()) as u64
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub(crate) fn ceil_log2(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        floor_log2(n - 1) + 1
    }
}
