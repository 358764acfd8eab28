//! Completion time against network size.

use std::io::Write;

use radio_gather_core::protocols::{by_id, mls_dtree, ProtocolError, ProtocolParams};
use radio_gather_core::rng::derive_seed;
use radio_gather_core::trees::TreeFamily;
use radio_gather_core::{run, DuplexMode, EngineError, RunConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::formats::{TrialRecord, TrialsFile, TRIALS_SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{protocol} did not complete within {max_steps} steps at n = {n}, trial {trial} (tree seed {tree_seed}, run seed {run_seed})")]
    Incomplete { protocol: String, n: usize, trial: usize, tree_seed: u64, run_seed: u64, max_steps: u64 },
    #[error("no sizes given")]
    NoSizes,
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub protocol: String,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub params: ProtocolParams,
    pub family: TreeFamily,
    /// Defaults to the protocol's horizon.
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub mean_steps: f64,
    pub max_steps: u64,
    pub bound_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub trials: TrialsFile,
}

impl ScalingReport {
    /// Log-log slope of max completion against `n`.
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.n as f64, r.max_steps as f64)).collect();
        loglog_slope(&pts)
    }

    /// Log-log slope of max completion against `reference(n)`.
    pub fn slope_against(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (reference(r.n as f64), r.max_steps as f64)).collect();
        loglog_slope(&pts)
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// The bound a protocol's completion time is compared with. `unb2` and
/// `bnd` have no explicit constant, so theirs is fitted at the smallest size
/// by the caller; here they return `n` and `n log₂ n`.
pub fn claimed_bound(protocol: &str, n: usize, mode: DuplexMode) -> Option<f64> {
    let x = n as f64;
    Some(match protocol {
        "rr-unb" | "rr-bnd" => x * x,
        "unb1" => 4.0 * x * (x.log2() + 1.0) + x,
        "unb2" => x,
        "bnd" => x * x.log2().max(1.0),
        "mls" => mls_dtree(n, mode).completion_bound() as f64,
        "rtree" => 4.0 * x * x.ln(),
        _ => return None,
    })
}

fn needs_fit(protocol: &str) -> bool {
    matches!(protocol, "unb2" | "bnd")
}

/// Seeds of trial `trial` at size `n`: the tree's, then the run's.
pub fn trial_seeds(master: u64, n: usize, trial: usize) -> (u64, u64) {
    let tree_seed = derive_seed(derive_seed(master, n as u64), trial as u64);
    (tree_seed, derive_seed(tree_seed, u64::MAX))
}

/// Runs every `(n, trial)` pair in parallel; results are ordered by size,
/// then trial index.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<ScalingReport, ScalingError> {
    if cfg.sizes.is_empty() {
        return Err(ScalingError::NoSizes);
    }
    let protocols = cfg
        .sizes
        .iter()
        .map(|&n| by_id(&cfg.protocol, n, cfg.params))
        .collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.sizes.len()).flat_map(|i| (0..cfg.trials).map(move |t| (i, t))).collect();
    let records = tasks
        .par_iter()
        .map(|&(i, trial)| {
            let n = cfg.sizes[i];
            let p = protocols[i].as_ref();
            let (tree_seed, run_seed) = trial_seeds(cfg.seed, n, trial);
            let tree = cfg.family.generate(n, tree_seed);
            let max_steps = cfg.max_steps.unwrap_or_else(|| p.horizon(n)).max(1);
            let trace = run(p, &tree, RunConfig::new(cfg.params.mode, max_steps, run_seed))?;
            let steps = trace.completion.ok_or_else(|| ScalingError::Incomplete {
                protocol: cfg.protocol.clone(),
                n,
                trial,
                tree_seed,
                run_seed,
                max_steps,
            })?;
            Ok(TrialRecord { n, trial, tree_seed, run_seed, steps })
        })
        .collect::<Result<Vec<_>, ScalingError>>()?;

    let mut rows: Vec<ScalingRow> = cfg
        .sizes
        .iter()
        .map(|&n| {
            let steps: Vec<u64> = records.iter().filter(|r| r.n == n).map(|r| r.steps).collect();
            let mean_steps = steps.iter().sum::<u64>() as f64 / steps.len().max(1) as f64;
            let max_steps = steps.iter().copied().max().unwrap_or(0);
            let bound = claimed_bound(&cfg.protocol, n, cfg.params.mode).unwrap_or(f64::NAN);
            ScalingRow { n, mean_steps, max_steps, bound_ratio: max_steps as f64 / bound }
        })
        .collect();
    if needs_fit(&cfg.protocol) {
        // C is chosen so that the smallest size has ratio 1
        let smallest = (0..rows.len()).min_by_key(|&i| rows[i].n).expect("sizes are non-empty");
        let c = rows[smallest].bound_ratio;
        if c > 0.0 {
            rows.iter_mut().for_each(|r| r.bound_ratio /= c);
        }
    }
    let trials = TrialsFile {
        schema: TRIALS_SCHEMA.into(),
        protocol: cfg.protocol.clone(),
        family: cfg.family.to_string(),
        duplex: cfg.params.mode,
        master_seed: cfg.seed,
        trials: records,
    };
    Ok(ScalingReport { rows, trials })
}
