use alloc::vec;
use alloc::vec::Vec;

use super::FiringSchedule;
use crate::engine::{run, DuplexMode, RunConfig, Tree};
use crate::protocols::scheduled;
use crate::trees::make_caterpillar;

/// One firing of the victim and the leaf that destroys it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Blocking {
    /// Firing time `t` of the victim.
    pub time: u64,
    pub blocker: usize,
    /// Spine position `s = t′ − t` of the blocker, where `t′` is its firing.
    pub offset: usize,
}

/// A caterpillar on which the victim's rumor never reaches the root.
///
/// The spine has `n` nodes labelled `n..2n−1` from the deepest one up to the
/// root; every label of the schedule is a leaf. The victim hangs from the
/// deepest spine node, so a firing at `t` reaches spine position `s` during
/// step `t + s`, exactly when the blocker attached there fires.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaterpillarWitness {
    pub victim: usize,
    pub matching: Vec<Blocking>,
    pub tree: Tree,
}

/// Searches every label for a perfect matching of its firings to distinct
/// blockers and returns the first candidate whose caterpillar, simulated
/// under full duplex, never delivers the victim's rumor.
pub fn find_caterpillar_witness(sched: &FiringSchedule) -> Option<CaterpillarWitness> {
    let n = sched.n;
    if n < 2 {
        return None;
    }
    let protocol = scheduled(sched.clone());
    let budget = sched.horizon + 2 * n as u64;
    (0..n).find_map(|w| {
        let matching = match_firings(sched, w)?;
        let mut offsets = vec![0; n];
        for b in &matching {
            offsets[b.blocker] = b.offset;
        }
        let tree = make_caterpillar(n, &offsets).expect("offsets lie in 0..n");
        let trace = run(&protocol, &tree, RunConfig::new(DuplexMode::Full, budget, 0).to_max())
            .expect("scheduled protocols are fire-and-forward");
        // the matching argument guarantees this; the simulation is the check
        debug_assert!(trace.delivery[w].is_none(), "unverified witness for victim {w}");
        trace.delivery[w].is_none().then_some(CaterpillarWitness { victim: w, matching, tree })
    })
}

/// Maximum matching between the firings of `w` and the other labels, an
/// edge joining firing `t` and label `u` when `u` fires in `[t, t + n − 1]`.
/// Returns `None` unless every firing is matched.
fn match_firings(sched: &FiringSchedule, w: usize) -> Option<Vec<Blocking>> {
    let n = sched.n as u64;
    let firings = sched.fires(w);
    // edges[i] = (u, first firing of u in the window of firing i)
    let edges: Vec<Vec<(usize, u64)>> = firings
        .iter()
        .map(|&t| {
            (0..sched.n)
                .filter(|&u| u != w)
                .filter_map(|u| {
                    let f = sched.fires(u);
                    let i = f.partition_point(|&x| x < t);
                    f.get(i).filter(|&&x| x < t + n).map(|&x| (u, x - t))
                })
                .collect()
        })
        .collect();
    if firings.len() >= sched.n {
        return None;
    }
    let mut owner: Vec<Option<usize>> = vec![None; sched.n];
    for i in 0..firings.len() {
        let mut seen = vec![false; sched.n];
        if !augment(i, &edges, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut matching: Vec<Blocking> = owner
        .iter()
        .enumerate()
        .filter_map(|(u, o)| {
            o.map(|i| {
                let offset = edges[i].iter().find(|e| e.0 == u).expect("matched along an edge").1;
                Blocking { time: firings[i], blocker: u, offset: offset as usize }
            })
        })
        .collect();
    matching.sort_by_key(|b| b.time);
    Some(matching)
}

// Kuhn's augmenting path search from left vertex `i`.
fn augment(i: usize, edges: &[Vec<(usize, u64)>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &(u, _) in &edges[i] {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        if owner[u].is_none_or(|j| augment(j, edges, owner, seen)) {
            owner[u] = Some(i);
            return true;
        }
    }
    false
}
