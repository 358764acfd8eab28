//! Subcommands of the `radio-gather` binary.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use radio_gather_core::protocols::{by_id, ProtocolParams};
use radio_gather_core::selectors::{
    build_disperser, exhaustive_work, random_family_size, random_selective_family, uncovered_firing,
    verified_random_family, verify_disperser_pairwise, SelectorError, VERIFY_BUDGET,
};
use radio_gather_core::trees::TreeFamily;
use radio_gather_core::verify::{extract_schedule, find_caterpillar_witness, random_single_firing, FiringSchedule};
use radio_gather_core::{run, DuplexMode, RunConfig, Tree};
use rand::Rng;
use radio_gather_core::rng::{derive_seed, global_rng};

use crate::formats::{parse_schedule_json, parse_tree_text, ConstructFile, Summary, WitnessFile, write_trace_jsonl};
use crate::lemmas::check_lemmas;
use crate::scaling::{run_scaling, ScalingConfig};

#[derive(Debug, Parser)]
#[command(name = "radio-gather", version, about = "Information gathering in radio networks with tree topology")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, env = "RADIO_GATHER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one protocol on one tree.
    Run(RunArgs),
    /// Completion time over random trees of several sizes, as CSV.
    Scaling(ScalingArgs),
    /// Dump and check a disperser or a selective family.
    Constructs(ConstructsArgs),
    /// Search for a caterpillar that defeats an oblivious schedule.
    Adversary(AdversaryArgs),
    /// Check the γ-height lemmas over generated trees.
    VerifyLemmas(LemmaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Duplex {
    Full,
    Half,
}

impl From<Duplex> for DuplexMode {
    fn from(d: Duplex) -> Self {
        match d {
            Duplex::Full => DuplexMode::Full,
            Duplex::Half => DuplexMode::Half,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    /// rr-unb, rr-bnd, unb1, unb2, bnd, mls or rtree.
    #[arg(long)]
    pub protocol: String,
    #[arg(long, value_enum, default_value = "half")]
    pub duplex: Duplex,
    /// Overrides κ in unb2 and bnd.
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Seed of the randomized selective family.
    #[arg(long, default_value_t = 0)]
    pub family_seed: u64,
}

impl ProtocolArgs {
    fn params(&self) -> ProtocolParams {
        ProtocolParams { mode: self.duplex.into(), family_seed: self.family_seed, kappa: self.kappa }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Tree family: path, star, caterpillar, kary<k> or random.
    #[arg(long, default_value = "random", conflicts_with = "tree_file")]
    pub tree: TreeFamily,
    #[arg(long, required_unless_present = "tree_file")]
    pub n: Option<usize>,
    /// Seed of the generated tree; defaults to the master seed.
    #[arg(long, conflicts_with = "tree_file")]
    pub tree_seed: Option<u64>,
    /// Tree in the parent-array text format.
    #[arg(long)]
    pub tree_file: Option<PathBuf>,
    /// Defaults to the protocol's guaranteed horizon.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_steps: Option<u64>,
    /// Line-delimited JSON trace.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON; printed to stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub allow_incomplete: bool,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "64,128,256,512,1024")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value = "random")]
    pub tree: TreeFamily,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_steps: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trial seeds and completion times as JSON.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructsArgs {
    #[arg(value_enum)]
    pub kind: ConstructKind,
    #[arg(long)]
    pub n: usize,
    /// Selectivity (selfam only).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "full")]
    pub duplex: Duplex,
    /// Construction attempts for a verifiable selective family.
    #[arg(long, default_value_t = 5)]
    pub retries: usize,
    /// Random shift vectors tried against the disperser.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructKind {
    Disperser,
    Selfam,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct ScheduleSource {
    /// Extract the schedule of an oblivious fire-and-forward protocol.
    #[arg(long, group = "source")]
    pub protocol: Option<String>,
    /// Schedule JSON `{n, T, F}`.
    #[arg(long, group = "source")]
    pub schedule_file: Option<PathBuf>,
    /// Every label fires once at a uniform time below the horizon.
    #[arg(long, group = "source")]
    pub random_single_firing: bool,
    /// Every label fires once, at step 0.
    #[arg(long, group = "source")]
    pub all_fire_at_0: bool,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    #[command(flatten)]
    pub source: ScheduleSource,
    #[arg(long)]
    pub n: Option<usize>,
    /// Schedule horizon; defaults to the protocol's horizon, or `n` for
    /// random single firings.
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, value_enum, default_value = "full")]
    pub duplex: Duplex,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 1000)]
    pub trees: usize,
    #[arg(long, default_value_t = 512)]
    pub max_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub gammas: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// Writes pretty JSON plus a newline to `path`, or to `stdout`.
fn emit_json<T: serde::Serialize>(value: &T, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command line, writing results to `stdout` and notes to
/// `stderr`.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a, cli.seed, stdout),
        Command::Scaling(a) => cmd_scaling(a, cli.seed, stdout, stderr),
        Command::Constructs(a) => cmd_constructs(a, cli.seed, stdout, stderr),
        Command::Adversary(a) => cmd_adversary(a, cli.seed, stdout),
        Command::VerifyLemmas(a) => cmd_verify_lemmas(a, cli.seed, stdout),
    }
}

fn load_tree(a: &RunArgs, seed: u64) -> Result<Tree> {
    if let Some(path) = &a.tree_file {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        return parse_tree_text(&text).with_context(|| format!("bad tree file {}", path.display()));
    }
    match a.n {
        Some(0) => bail!("--n must be at least 1"),
        Some(n) => Ok(a.tree.generate(n, a.tree_seed.unwrap_or(seed))),
        None => bail!("give --n or --tree-file"),
    }
}

pub fn cmd_run(a: RunArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let tree = load_tree(&a, seed)?;
    let n = tree.n();
    let params = a.protocol.params();
    let p = by_id(&a.protocol.protocol, n, params)?;
    let max_steps = a.max_steps.unwrap_or_else(|| p.horizon(n)).max(1);
    let mut cfg = RunConfig::new(params.mode, max_steps, seed);
    if a.out.is_some() {
        cfg = cfg.recording();
    }
    let trace = run(p.as_ref(), &tree, cfg)?;
    let summary = Summary::new(p.id(), params.mode, seed, &trace);
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        write_trace_jsonl(&mut w, &trace, &summary)?;
        w.flush()?;
    }
    emit_json(&summary, a.summary.as_deref(), stdout)?;
    if !trace.is_complete() && !a.allow_incomplete {
        bail!(
            "INCOMPLETE: {} of {n} rumors delivered within {max_steps} steps (pass --allow-incomplete to accept)",
            trace.delivered_count()
        );
    }
    Ok(())
}

pub fn cmd_scaling(a: ScalingArgs, seed: u64, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = ScalingConfig {
        protocol: a.protocol.protocol.clone(),
        sizes: a.sizes,
        trials: a.trials,
        seed,
        params: a.protocol.params(),
        family: a.tree,
        max_steps: a.max_steps,
    };
    let report = run_scaling(&cfg)?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        None => report.write_csv(&mut *stdout)?,
    }
    if let Some(path) = &a.trials_out {
        emit_json(&report.trials, Some(path), stdout)?;
    }
    if report.rows.len() >= 2 {
        writeln!(stderr, "log-log slope of max_steps against n: {:.3}", report.slope())?;
    }
    Ok(())
}

fn verdict(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.into()
}

// above this many (pair, difference) operations the pairwise check is skipped
const DISPERSER_BUDGET: u128 = 2_000_000_000;

// selective families with more set entries than this are not dumped
const MAX_DUMPED_ENTRIES: u128 = 20_000_000;

pub fn cmd_constructs(a: ConstructsArgs, seed: u64, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if a.n == 0 {
        bail!("--n must be at least 1");
    }
    let mut checks = BTreeMap::new();
    let dump = match a.kind {
        ConstructKind::Disperser => {
            let mode: DuplexMode = a.duplex.into();
            let d = build_disperser(a.n, mode);
            let cap = match mode {
                DuplexMode::Full => 2,
                DuplexMode::Half => 4,
            };
            let (m, p) = (d.m as u128, d.p as u128);
            let work = m * m * (p * p + 4 * d.s as u128);
            let pairwise = if work <= DISPERSER_BUDGET {
                verdict(verify_disperser_pairwise(&d, cap))
            } else {
                "UNVERIFIED".into()
            };
            checks.insert(format!("pairwise_kill_cap_{cap}"), pairwise);
            let mut rng = global_rng(derive_seed(seed, a.n as u64));
            let free = (0..a.samples).all(|_| {
                let delta: Vec<usize> = (0..d.m).map(|_| rng.gen_range(0..a.n)).collect();
                (0..d.m).all(|j| uncovered_firing(&d, &delta, j).is_some())
            });
            checks.insert(format!("uncovered_firing_{}_samples", a.samples), verdict(free));
            ConstructFile::disperser(&d, checks)
        }
        ConstructKind::Selfam => {
            if a.k == 0 || a.k > a.n {
                bail!("--k must satisfy 1 <= k <= n");
            }
            let m = random_family_size(a.n, a.k);
            let work = exhaustive_work(a.n, a.k, m);
            let verifiable = a.n <= 64 && work <= VERIFY_BUDGET;
            let family = if verifiable {
                match verified_random_family(a.n, a.k, seed, a.retries.max(1)) {
                    Ok(Some((f, attempts))) => {
                        writeln!(stderr, "verified after {attempts} attempt(s)")?;
                        checks.insert("strongly_selective".into(), verdict(true));
                        Some(f)
                    }
                    Ok(None) => {
                        checks.insert("strongly_selective".into(), verdict(false));
                        Some(random_selective_family(a.n, a.k, derive_seed(seed, a.retries.max(1) as u64 - 1)))
                    }
                    Err(SelectorError::ParametersTooLarge { .. }) => unreachable!("work checked against the budget"),
                }
            } else {
                checks.insert("strongly_selective".into(), "UNVERIFIED".into());
                let entries = (a.n as u128 * m as u128) / a.k as u128;
                (entries <= MAX_DUMPED_ENTRIES).then(|| random_selective_family(a.n, a.k, seed))
            };
            match family {
                Some(f) => ConstructFile::selective_family(&f, checks),
                None => {
                    checks.insert("sets".into(), "OMITTED".into());
                    ConstructFile::selective_family_header(a.n, a.k, m, checks)
                }
            }
        }
    };
    for (name, v) in &dump.checks {
        writeln!(stderr, "{v} {name}")?;
    }
    emit_json(&dump, a.out.as_deref(), stdout)
}

fn load_schedule(a: &AdversaryArgs, seed: u64) -> Result<FiringSchedule> {
    let s = &a.source;
    if let Some(path) = &s.schedule_file {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        return parse_schedule_json(&text).with_context(|| format!("bad schedule file {}", path.display()));
    }
    let Some(n) = a.n.filter(|&n| n >= 1) else {
        bail!("--n (at least 1) is required for this schedule source");
    };
    if let Some(id) = &s.protocol {
        let params = ProtocolParams { mode: a.duplex.into(), ..ProtocolParams::default() };
        let p = by_id(id, n, params)?;
        let horizon = a.horizon.unwrap_or_else(|| p.horizon(n));
        return Ok(extract_schedule(p.as_ref(), n, horizon)?);
    }
    if s.random_single_firing {
        return Ok(random_single_firing(n, a.horizon.unwrap_or(n as u64), seed));
    }
    let horizon = a.horizon.unwrap_or(1).max(1);
    Ok(FiringSchedule::new(n, horizon, vec![vec![0]; n])?)
}

pub fn cmd_adversary(a: AdversaryArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let sched = load_schedule(&a, seed)?;
    match find_caterpillar_witness(&sched) {
        // the search only returns witnesses whose simulation lost the victim
        Some(w) => emit_json(&WitnessFile::new(&w, true), a.out.as_deref(), stdout),
        None => {
            if let Some(p) = &a.out {
                fs::write(p, "none\n")?;
            }
            writeln!(stdout, "none")?;
            Ok(())
        }
    }
}

pub fn cmd_verify_lemmas(a: LemmaArgs, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    if a.gammas.iter().any(|&g| g < 2) {
        bail!("gammas must be at least 2");
    }
    let report = check_lemmas(a.trees, a.max_n, &a.gammas, seed);
    emit_json(&report, a.out.as_deref(), stdout)?;
    if !report.passed() {
        bail!("{} violations", report.violations.len());
    }
    Ok(())
}
