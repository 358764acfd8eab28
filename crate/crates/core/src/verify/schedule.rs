use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::VerifyError;
use crate::engine::{Action, Message, NodeView};
use crate::protocols::{NodeInit, Protocol};
use crate::rng::{global_rng, node_rng};

/// Firing times `F_v` of every label `v < n`, all below the horizon `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringSchedule {
    pub n: usize,
    pub horizon: u64,
    fires: Vec<Vec<u64>>,
}

impl FiringSchedule {
    /// Sorts and deduplicates each label's times.
    pub fn new(n: usize, horizon: u64, mut fires: Vec<Vec<u64>>) -> Result<Self, VerifyError> {
        if fires.len() != n {
            return Err(VerifyError::WrongLabelCount { expected: n, found: fires.len() });
        }
        for (label, times) in fires.iter_mut().enumerate() {
            times.sort_unstable();
            times.dedup();
            if let Some(&time) = times.last().filter(|&&t| t >= horizon) {
                return Err(VerifyError::TimeOutOfRange { label, time, horizon });
            }
        }
        Ok(FiringSchedule { n, horizon, fires })
    }

    pub fn empty(n: usize, horizon: u64) -> Self {
        FiringSchedule { n, horizon, fires: vec![Vec::new(); n] }
    }

    /// Firing times of `label`; empty for labels outside the schedule.
    pub fn fires(&self, label: usize) -> &[u64] {
        self.fires.get(label).map_or(&[], Vec::as_slice)
    }

    pub fn fires_at(&self, label: usize, t: u64) -> bool {
        self.fires(label).binary_search(&t).is_ok()
    }

    pub fn total_firings(&self) -> usize {
        self.fires.iter().map(Vec::len).sum()
    }

    pub fn all_fires(&self) -> &[Vec<u64>] {
        &self.fires
    }
}

/// Every label fires exactly once, at a uniform time in `0..horizon`.
pub fn random_single_firing(n: usize, horizon: u64, seed: u64) -> FiringSchedule {
    let mut rng = global_rng(seed);
    let fires = (0..n).map(|_| vec![rng.gen_range(0..horizon.max(1))]).collect();
    FiringSchedule::new(n, horizon.max(1), fires).expect("times drawn below the horizon")
}

/// Reads off the firing times of labels `0..n` over `0..horizon`.
///
/// Each label is run in isolation three times: hearing nothing, and hearing
/// a foreign rumor after every even or every odd step. Without input the
/// node may only fire or listen. With a rumor pending it must forward it
/// exactly when it did not fire in the silent run, and stay mute otherwise.
/// Any other behaviour means the firing decision is not a function of label
/// and time alone.
pub fn extract_schedule(protocol: &dyn Protocol, n: usize, horizon: u64) -> Result<FiringSchedule, VerifyError> {
    let mut fires = Vec::with_capacity(n);
    for label in 0..n {
        let init = || NodeInit { label, n, rng: node_rng(0, label) };
        let mut silent = protocol.instantiate(init());
        let mut probes = [protocol.instantiate(init()), protocol.instantiate(init())];
        let foreign = (label + 1) % n.max(2);
        let mut times = Vec::new();
        for t in 0..horizon {
            let view = NodeView { label, n, time: t, own_rumor: label };
            let own = Action::Transmit(Message::Fnf { rumor: label });
            let fired = match silent.act(&view) {
                Action::Listen => false,
                a if a == own => true,
                _ => return Err(VerifyError::NotOblivious { label, step: t }),
            };
            if fired {
                times.push(t);
            }
            for (parity, probe) in probes.iter_mut().enumerate() {
                let pending = t > 0 && (t - 1) % 2 == parity as u64;
                let expected = match (pending, fired) {
                    (false, _) => silent_expectation(fired, label),
                    (true, true) => Action::Mute,
                    (true, false) => Action::Transmit(Message::Fnf { rumor: foreign }),
                };
                if probe.act(&view) != expected {
                    return Err(VerifyError::NotOblivious { label, step: t });
                }
                if t % 2 == parity as u64 {
                    probe.on_receive(t, &Message::Fnf { rumor: foreign });
                }
            }
        }
        fires.push(times);
    }
    FiringSchedule::new(n, horizon, fires)
}

fn silent_expectation(fired: bool, label: usize) -> Action {
    if fired {
        Action::Transmit(Message::Fnf { rumor: label })
    } else {
        Action::Listen
    }
}
