//! Structural checks of γ-heights over a generated corpus of trees.
//!
//! * Depth: `D_γ ≤ log_γ n`, and every node `v` has `|T_v| ≥ γ^{height(v)}`.
//! * Shift: in the subtree induced by nodes of height at least `h`, every
//!   node's height is its original height minus `h`.

use rand::Rng;
use radio_gather_core::rng::{derive_seed, global_rng};
use radio_gather_core::trees::{gamma_heights, subtree_above, TreeFamily};
use radio_gather_core::Tree;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub tree: usize,
    pub n: usize,
    pub gamma: usize,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub trees: usize,
    pub checks: u64,
    pub violations: Vec<Violation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tree `index` of the corpus: mostly random recursive trees, with complete
/// `k`-ary heaps and caterpillars mixed in, `1 ≤ n ≤ max_n`.
pub fn corpus_tree(seed: u64, index: usize, max_n: usize) -> Tree {
    let s = derive_seed(seed, index as u64);
    let mut rng = global_rng(s);
    let n = rng.gen_range(1..=max_n.max(1));
    let family = match index % 6 {
        0..=2 => TreeFamily::Random,
        3 => TreeFamily::Kary(rng.gen_range(2..=4)),
        4 => TreeFamily::Caterpillar,
        _ => TreeFamily::Star,
    };
    family.generate(n, s)
}

fn log_base(x: f64, b: f64) -> f64 {
    x.ln() / b.ln()
}

fn check_tree(index: usize, tree: &Tree, gamma: usize, checks: &mut u64, out: &mut Vec<Violation>) {
    let n = tree.n();
    let mut fail = |check: &'static str, detail: String| out.push(Violation { tree: index, n, gamma, check, detail });
    let gh = gamma_heights(tree, gamma);
    let sizes = tree.subtree_sizes();
    for v in 0..n {
        *checks += 1;
        if (sizes[v] as f64) < (gamma as f64).powi(gh.heights[v] as i32) {
            fail("subtree-size", format!("node {v}: |T_v| = {} below {gamma}^{}", sizes[v], gh.heights[v]));
        }
    }
    *checks += 1;
    if gamma >= 2 && gh.depth as f64 > log_base(n as f64, gamma as f64) + 1e-9 {
        fail("depth", format!("D = {} above log_{gamma} {n}", gh.depth));
    }
    for h in 0..=gh.depth {
        let sub = match subtree_above(tree, gamma, h) {
            Ok(s) => s,
            Err(e) => {
                fail("shift", format!("h = {h}: {e}"));
                continue;
            }
        };
        let inner = gamma_heights(&sub.tree, gamma);
        for (v, &orig) in sub.original.iter().enumerate() {
            *checks += 1;
            if inner.heights[v] + h != gh.heights[orig] {
                fail("shift", format!("h = {h}: node {orig} has {} instead of {}", inner.heights[v], gh.heights[orig] - h));
            }
        }
    }
}

pub fn check_lemmas(trees: usize, max_n: usize, gammas: &[usize], seed: u64) -> LemmaReport {
    let parts: Vec<(u64, Vec<Violation>)> = (0..trees)
        .into_par_iter()
        .map(|i| {
            let tree = corpus_tree(seed, i, max_n);
            let (mut checks, mut out) = (0, Vec::new());
            for &g in gammas {
                check_tree(i, &tree, g, &mut checks, &mut out);
            }
            (checks, out)
        })
        .collect();
    LemmaReport {
        trees,
        checks: parts.iter().map(|p| p.0).sum(),
        violations: parts.into_iter().flat_map(|p| p.1).collect(),
    }
}
