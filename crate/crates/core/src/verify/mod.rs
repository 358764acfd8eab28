//! Executable lower-bound constructions and independent oracles.
//!
//! * [`extract_schedule`] turns an oblivious fire-and-forward protocol into
//!   the firing times of every label.
//! * [`find_caterpillar_witness`] searches for a caterpillar on which a given
//!   schedule never delivers some rumor, and confirms it by simulation.
//! * [`star_protocol_trial`] samples label-less protocols on a star.
//! * [`delivery_oracle`] is the reference delivery set.

mod adversary;
mod schedule;
mod star;

pub use adversary::{find_caterpillar_witness, Blocking, CaterpillarWitness};
pub use schedule::{extract_schedule, random_single_firing, FiringSchedule};
pub use star::{interval_params, star_protocol_trial, IntervalParams, StarKind, StarTrial};

use crate::engine::{run, DuplexMode, RumorSet, RunConfig, Tree};
use crate::protocols::{round_robin_bounded, Protocol};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("label {label} does not behave obliviously at step {step}")]
    NotOblivious { label: usize, step: u64 },
    #[error("label {label} fires at {time}, outside the horizon {horizon}")]
    TimeOutOfRange { label: usize, time: u64, horizon: u64 },
    #[error("schedule lists {found} labels, expected {expected}")]
    WrongLabelCount { expected: usize, found: usize },
}

/// Rumors delivered by the bounded round robin within `n²` steps. Holders of
/// a rumor always form a single path, so no step ever collides and every
/// rumor climbs one edge per `n` steps.
pub fn delivery_oracle(tree: &Tree) -> RumorSet {
    let rr = round_robin_bounded();
    let n = tree.n();
    let trace = run(&rr, tree, RunConfig::new(DuplexMode::Half, rr.horizon(n).max(1), 0))
        .expect("round robin respects the bounded message model");
    trace.delivered().into_iter().collect()
}
