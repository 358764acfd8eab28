use alloc::vec;
use alloc::vec::Vec;

use super::message::{Message, RumorId};
use super::tree::Tree;

/// A message received by `node` from its child `from`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reception {
    pub node: usize,
    pub from: usize,
    pub message: Message,
}

/// Everything that happened on the channel in one step. Nodes that do not
/// appear in `receptions` received silence.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub step: u64,
    pub transmitters: Vec<usize>,
    pub receptions: Vec<Reception>,
    /// Nodes at which two or more children transmitted.
    pub collisions: Vec<usize>,
}

/// Result of a run. `delivery[rumor]` is the time (steps elapsed) at which
/// the root first held `rumor`; the root's own rumor has time 0.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub n: usize,
    pub delivery: Vec<Option<u64>>,
    /// Max over `delivery`, or `None` if some rumor never arrived.
    pub completion: Option<u64>,
    pub steps_run: u64,
    pub collisions_total: u64,
    pub transmissions_total: u64,
    /// Empty unless the run was configured to record steps.
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub(crate) fn new(n: usize) -> Self {
        Trace {
            n,
            delivery: vec![None; n],
            completion: None,
            steps_run: 0,
            collisions_total: 0,
            transmissions_total: 0,
            steps: Vec::new(),
        }
    }

    pub(crate) fn finalize(&mut self) {
        self.completion = self
            .delivery
            .iter()
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)));
    }

    pub fn is_complete(&self) -> bool {
        self.completion.is_some()
    }

    pub fn delivered_count(&self) -> usize {
        self.delivery.iter().filter(|d| d.is_some()).count()
    }

    /// Rumor ids that reached the root, ascending.
    pub fn delivered(&self) -> Vec<RumorId> {
        (0..self.n).filter(|&r| self.delivery[r].is_some()).collect()
    }

    /// Messages received by node `v`, in order, as `(step, message)`.
    /// Requires a recorded trace.
    pub fn inbox(&self, v: usize) -> Vec<(u64, &Message)> {
        self.steps
            .iter()
            .flat_map(|s| s.receptions.iter().filter(move |r| r.node == v).map(move |r| (s.step, &r.message)))
            .collect()
    }

    /// Reconstructs the chain of receptions that carried `rumor` from its
    /// originator to the root, as `(step, receiving node)` pairs ending at the
    /// root. Returns `None` if the recorded steps do not justify the recorded
    /// delivery time. Requires a recorded trace.
    pub fn delivery_chain(&self, tree: &Tree, rumor: RumorId) -> Option<Vec<(u64, usize)>> {
        let origin = tree.node_of_label(rumor);
        let root = tree.root();
        if origin == root {
            return (self.delivery[rumor] == Some(0)).then(Vec::new);
        }
        let arrival = self.delivery[rumor]?.checked_sub(1)?;
        // Walk backwards: find, for the current node, a reception of the rumor
        // no later than `before`, from a child that itself obtained it earlier.
        let mut chain = Vec::new();
        let mut node = root;
        let mut before = arrival;
        loop {
            let (step, from) = self.steps.iter().rev().filter(|s| s.step <= before).find_map(|s| {
                s.receptions
                    .iter()
                    .find(|r| r.node == node && r.message.carries(rumor))
                    .map(|r| (s.step, r.from))
            })?;
            if node == root && step != arrival {
                return None;
            }
            chain.push((step, node));
            if from == origin {
                break;
            }
            node = from;
            before = step.checked_sub(1)?;
        }
        chain.reverse();
        Some(chain)
    }
}
