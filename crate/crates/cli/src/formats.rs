//! File formats read and written by the command line.
//!
//! Every JSON document carries a `schema` field naming its format and
//! version. Trees use a plain text format: `n` on the first line, then the
//! `n` parents (the root is its own parent), then the `n` labels, one
//! integer per line. Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::io::{self, Write};

use radio_gather_core::engine::{RawTree, StepRecord};
use radio_gather_core::selectors::{Disperser, SelectiveFamily};
use radio_gather_core::verify::{Blocking, CaterpillarWitness, FiringSchedule, VerifyError};
use radio_gather_core::{DuplexMode, Trace, Tree, TreeError};
use serde::{Deserialize, Serialize};

pub const TRACE_SCHEMA: &str = "radio-gather/trace/1";
pub const SUMMARY_SCHEMA: &str = "radio-gather/summary/1";
pub const SCHEDULE_SCHEMA: &str = "radio-gather/schedule/1";
pub const WITNESS_SCHEMA: &str = "radio-gather/witness/1";
pub const CONSTRUCT_SCHEMA: &str = "radio-gather/construct/1";
pub const TRIALS_SCHEMA: &str = "radio-gather/trials/1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: expected an integer, found {found:?}")]
    NotAnInteger { line: usize, found: String },
    #[error("tree file is empty")]
    Empty,
    #[error("tree file declares n = {n} but holds {found} values after it (expected {expected})")]
    WrongLength { n: usize, found: usize, expected: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Schedule(#[from] VerifyError),
    #[error("schedule lists label {label}, outside 0..{n}")]
    LabelOutOfRange { label: usize, n: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn parse_tree_text(text: &str) -> Result<Tree, FormatError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse::<usize>().map_err(|_| FormatError::NotAnInteger { line: i + 1, found: line.into() })?;
        values.push(v);
    }
    let (&n, rest) = values.split_first().ok_or(FormatError::Empty)?;
    if rest.len() != 2 * n {
        return Err(FormatError::WrongLength { n, found: rest.len(), expected: 2 * n });
    }
    Ok(Tree::new(rest[..n].to_vec(), rest[n..].to_vec())?)
}

pub fn tree_text(tree: &Tree) -> String {
    let mut out = format!("{}\n", tree.n());
    for v in tree.parents().iter().chain(tree.labels()) {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// `{n, T, F: {label: [times]}}`; labels without firings may be omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFile {
    #[serde(default = "schedule_schema")]
    pub schema: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(rename = "F")]
    pub fires: BTreeMap<usize, Vec<u64>>,
}

fn schedule_schema() -> String {
    SCHEDULE_SCHEMA.into()
}

impl From<&FiringSchedule> for ScheduleFile {
    fn from(s: &FiringSchedule) -> Self {
        let fires = s.all_fires().iter().cloned().enumerate().collect();
        ScheduleFile { schema: schedule_schema(), n: s.n, horizon: s.horizon, fires }
    }
}

impl TryFrom<ScheduleFile> for FiringSchedule {
    type Error = FormatError;

    fn try_from(f: ScheduleFile) -> Result<Self, FormatError> {
        let mut fires = vec![Vec::new(); f.n];
        for (label, times) in f.fires {
            let slot = fires.get_mut(label).ok_or(FormatError::LabelOutOfRange { label, n: f.n })?;
            *slot = times;
        }
        Ok(FiringSchedule::new(f.n, f.horizon, fires)?)
    }
}

pub fn parse_schedule_json(text: &str) -> Result<FiringSchedule, FormatError> {
    serde_json::from_str::<ScheduleFile>(text)?.try_into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub schema: String,
    pub victim: usize,
    pub matching: Vec<Blocking>,
    pub tree: RawTree,
    /// The victim's rumor was still missing when the re-run stopped.
    pub reverified: bool,
}

impl WitnessFile {
    pub fn new(w: &CaterpillarWitness, reverified: bool) -> Self {
        WitnessFile {
            schema: WITNESS_SCHEMA.into(),
            victim: w.victim,
            matching: w.matching.clone(),
            tree: w.tree.clone().into(),
            reverified,
        }
    }
}

/// Dump of a disperser or selective family: `{n, k or p, m, s, sets}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructFile {
    pub schema: &'static str,
    pub kind: &'static str,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplex: Option<DuplexMode>,
    /// Left out when too large to dump.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<u64>>>,
    /// Property name to `PASS`, `FAIL` or `UNVERIFIED`.
    pub checks: BTreeMap<String, String>,
}

impl ConstructFile {
    pub fn disperser(d: &Disperser, checks: BTreeMap<String, String>) -> Self {
        ConstructFile {
            schema: CONSTRUCT_SCHEMA,
            kind: "disperser",
            n: d.n,
            k: None,
            p: Some(d.p),
            m: d.m,
            s: Some(d.s),
            duplex: Some(d.mode),
            sets: Some(d.sets.clone()),
            checks,
        }
    }

    pub fn selective_family(f: &SelectiveFamily, checks: BTreeMap<String, String>) -> Self {
        ConstructFile {
            schema: CONSTRUCT_SCHEMA,
            kind: "selfam",
            n: f.n,
            k: Some(f.k),
            p: None,
            m: f.m(),
            s: None,
            duplex: None,
            sets: Some(f.sets.iter().map(|s| s.iter().map(|&x| x as u64).collect()).collect()),
            checks,
        }
    }

    /// A selective family described by its parameters alone.
    pub fn selective_family_header(n: usize, k: usize, m: usize, checks: BTreeMap<String, String>) -> Self {
        ConstructFile {
            schema: CONSTRUCT_SCHEMA,
            kind: "selfam",
            n,
            k: Some(k),
            p: None,
            m,
            s: None,
            duplex: None,
            sets: None,
            checks,
        }
    }
}

/// `{protocol, n, completion_step, delivered, collisions_total}` plus run
/// parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub protocol: String,
    pub n: usize,
    pub duplex: DuplexMode,
    pub seed: u64,
    pub completion_step: Option<u64>,
    pub delivered: usize,
    pub collisions_total: u64,
    pub transmissions_total: u64,
    pub steps_run: u64,
}

impl Summary {
    pub fn new(protocol: &str, mode: DuplexMode, seed: u64, trace: &Trace) -> Self {
        Summary {
            schema: SUMMARY_SCHEMA.into(),
            protocol: protocol.into(),
            n: trace.n,
            duplex: mode,
            seed,
            completion_step: trace.completion,
            delivered: trace.delivered_count(),
            collisions_total: trace.collisions_total,
            transmissions_total: trace.transmissions_total,
            steps_run: trace.steps_run,
        }
    }
}

#[derive(Serialize)]
struct StepLine<'a> {
    schema: &'static str,
    record: &'static str,
    #[serde(flatten)]
    step: &'a StepRecord,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    schema: &'static str,
    record: &'static str,
    #[serde(flatten)]
    summary: &'a Summary,
    /// Rumor label to delivery time; undelivered rumors are left out.
    delivery: BTreeMap<usize, u64>,
}

/// Writes one JSON object per recorded step, then a summary record with the
/// delivery map. Each line has `"record": "step"` or `"record": "summary"`.
pub fn write_trace_jsonl(mut out: impl Write, trace: &Trace, summary: &Summary) -> io::Result<()> {
    for step in &trace.steps {
        serde_json::to_writer(&mut out, &StepLine { schema: TRACE_SCHEMA, record: "step", step })?;
        out.write_all(b"\n")?;
    }
    let delivery = trace.delivery.iter().enumerate().filter_map(|(r, d)| d.map(|d| (r, d))).collect();
    serde_json::to_writer(&mut out, &SummaryLine { schema: TRACE_SCHEMA, record: "summary", summary, delivery })?;
    out.write_all(b"\n")
}

/// Seeds of every trial behind a scaling CSV, enough to replay each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialsFile {
    pub schema: String,
    pub protocol: String,
    pub family: String,
    pub duplex: DuplexMode,
    pub master_seed: u64,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    /// Seed of the generated tree.
    pub tree_seed: u64,
    /// Seed of the run.
    pub run_seed: u64,
    pub steps: u64,
}
