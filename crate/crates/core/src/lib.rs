//! Discrete-time simulation of information gathering in ad-hoc radio
//! networks whose topology is a tree with edges directed to the root.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`engine`]: trees, messages, the collision channel and the step loop;
//! * [`trees`]: γ-heights, threshold subtrees and tree generators;
//! * [`selectors`]: strong k-selective families and Sidon-style dispersers;
//! * [`protocols`]: the gathering protocols as per-node state machines;
//! * [`verify`]: executable lower-bound adversaries and statistical trials.
//!
//! Time is measured in steps `0, 1, 2, ...`. A message received during step
//! `t` counts as delivered at time `t + 1`, so completion times are the number
//! of steps elapsed before the root holds every rumor.
#![no_std]

extern crate alloc;

pub mod engine;
pub mod protocols;
pub mod rng;
pub mod selectors;
pub mod trees;
pub mod verify;

pub use engine::{
    run, step, Action, DuplexMode, EngineError, Message, MessageModel, NodeView, RumorSet,
    RunConfig, Trace, Tree, TreeError,
};
pub use protocols::{NodeProtocol, NodeSnapshot, Phase, Protocol};
