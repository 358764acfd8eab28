use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{node_rng, NodeRng};

/// Distribution from which every leaf of a star independently draws the set
/// of steps in which it transmits.
pub enum StarKind<'a> {
    /// `⌈c·ln 2·ln n⌉` intervals of length `⌈n/ln 2⌉`, one uniform step in each.
    Interval(f64),
    /// Each step of `0..horizon` independently with probability `p`.
    Iid { p: f64, horizon: u64 },
    Custom(&'a dyn Fn(&mut NodeRng) -> Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalParams {
    /// `⌈c·n·ln n⌉`.
    pub horizon: u64,
    pub intervals: u64,
    pub length: u64,
}

pub fn interval_params(c: f64, n: usize) -> IntervalParams {
    let (nf, ln2) = (n as f64, core::f64::consts::LN_2);
    let ln_n = libm::log(nf);
    IntervalParams {
        horizon: libm::ceil(c * nf * ln_n) as u64,
        intervals: (libm::ceil(c * ln2 * ln_n) as u64).max(1),
        length: (libm::ceil(nf / ln2) as u64).max(1),
    }
}

/// Transmission steps and outcome of every leaf in one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarTrial {
    /// Sorted transmission steps of each leaf.
    pub times: Vec<Vec<u64>>,
    /// Leaf `i` succeeded: it was the only transmitter in some step.
    pub success: Vec<bool>,
    // number of leaves transmitting in each used step
    load: BTreeMap<u64, u32>,
}

impl StarTrial {
    pub fn all_succeeded(&self) -> bool {
        self.success.iter().all(|&s| s)
    }

    /// Whether step `t` was used by exactly one leaf.
    pub fn isolated(&self, t: u64) -> bool {
        self.load.get(&t) == Some(&1)
    }
}

/// One trial of a label-less protocol on a star with `n` leaves; leaf `i`
/// draws from stream `i` of `seed`.
pub fn star_protocol_trial(kind: &StarKind<'_>, n: usize, seed: u64) -> StarTrial {
    let interval = match *kind {
        StarKind::Interval(c) => Some(interval_params(c, n)),
        _ => None,
    };
    let mut times: Vec<Vec<u64>> = (0..n)
        .map(|leaf| {
            let mut rng = node_rng(seed, leaf);
            match kind {
                StarKind::Interval(_) => {
                    let ip = interval.expect("computed above");
                    (0..ip.intervals).map(|i| i * ip.length + rng.gen_range(0..ip.length)).collect()
                }
                StarKind::Iid { p, horizon } => (0..*horizon).filter(|_| rng.gen_bool(p.clamp(0.0, 1.0))).collect(),
                StarKind::Custom(f) => f(&mut rng),
            }
        })
        .collect();
    let mut load = BTreeMap::new();
    for ts in &mut times {
        ts.sort_unstable();
        ts.dedup();
        for &t in ts.iter() {
            *load.entry(t).or_insert(0u32) += 1;
        }
    }
    let success = times.iter().map(|ts| ts.iter().any(|t| load[t] == 1)).collect();
    StarTrial { times, success, load }
}
