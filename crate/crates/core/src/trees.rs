//! Tree generators and γ-heights.
//!
//! The γ-height of a leaf is 0. For an internal node whose children reach
//! maximum γ-height `g`, it is `g + 1` if at least γ children attain `g`, and
//! `g` otherwise. The γ-depth `D_γ` is the γ-height of the root. With γ = 1
//! this is the ordinary height; with γ = 2 the nodes of equal height form
//! vertex-disjoint paths, which is what the bounded protocol exploits.
//!
//! All generators return trees whose node ids equal their labels; use
//! [`Tree::with_random_labels`] for other labelings.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::engine::Tree;
use crate::rng::{derive_seed, global_rng};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreesError {
    #[error("threshold {h} exceeds the gamma-depth {depth}")]
    EmptyResult { h: usize, depth: usize },
    #[error("leaf {leaf} has offset {offset}, outside the spine of length {spine}")]
    InvalidOffset { leaf: usize, offset: usize, spine: usize },
}

/// γ-heights of every node of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaHeights {
    pub gamma: usize,
    /// Indexed by node id.
    pub heights: Vec<usize>,
    /// `D_γ`, the height of the root.
    pub depth: usize,
}

/// Panics if `gamma == 0`.
pub fn gamma_heights(tree: &Tree, gamma: usize) -> GammaHeights {
    assert!(gamma >= 1, "gamma must be at least 1");
    let mut heights = vec![0; tree.n()];
    for v in tree.bottom_up() {
        let children = tree.children(v);
        let Some(g) = children.iter().map(|&c| heights[c]).max() else {
            continue;
        };
        let attaining = children.iter().filter(|&&c| heights[c] == g).count();
        heights[v] = if attaining >= gamma { g + 1 } else { g };
    }
    let depth = heights[tree.root()];
    GammaHeights { gamma, heights, depth }
}

/// An induced subtree together with the map back to the original node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subtree {
    pub tree: Tree,
    /// `original[v]` is the node of the source tree that became node `v`.
    pub original: Vec<usize>,
}

/// The subtree induced by the nodes of γ-height at least `h`.
///
/// Heights never decrease towards the root, so the node set is closed under
/// taking parents and always contains the root. Labels are renumbered to
/// `0..n′` preserving their relative order.
pub fn subtree_above(tree: &Tree, gamma: usize, h: usize) -> Result<Subtree, TreesError> {
    let gh = gamma_heights(tree, gamma);
    if h > gh.depth {
        return Err(TreesError::EmptyResult { h, depth: gh.depth });
    }
    let original: Vec<usize> = (0..tree.n()).filter(|&v| gh.heights[v] >= h).collect();
    let mut index = vec![usize::MAX; tree.n()];
    for (i, &v) in original.iter().enumerate() {
        index[v] = i;
    }
    let parent = original.iter().map(|&v| index[tree.parent(v)]).collect();
    let mut by_label: Vec<usize> = (0..original.len()).collect();
    by_label.sort_by_key(|&i| tree.label(original[i]));
    let mut label = vec![0; original.len()];
    for (rank, &i) in by_label.iter().enumerate() {
        label[i] = rank;
    }
    let tree = Tree::new(parent, label).expect("an upward-closed node set induces a tree");
    Ok(Subtree { tree, original })
}

fn identity(parent: Vec<usize>) -> Tree {
    Tree::with_identity_labels(parent).expect("generators build valid trees")
}

/// Path on `n` nodes; node `i` is the parent of node `i + 1`, node 0 is the
/// root. Panics if `n == 0`.
pub fn make_path(n: usize) -> Tree {
    assert!(n >= 1, "a tree needs a node");
    identity((0..n).map(|i| i.saturating_sub(1)).collect())
}

/// Root 0 with `n − 1` leaves. Panics if `n == 0`.
pub fn make_star(n: usize) -> Tree {
    assert!(n >= 1, "a tree needs a node");
    identity(vec![0; n])
}

/// Spine of `spine` nodes labelled `L..L+spine` from the deepest node up to
/// the root, where `L = offsets.len()`, plus leaves `0..L`; leaf `i` hangs
/// from the spine node at distance `offsets[i]` from the deepest one.
/// With `L = spine = n` the spine is `n..2n−1` and the root is `2n − 1`.
pub fn make_caterpillar(spine: usize, offsets: &[usize]) -> Result<Tree, TreesError> {
    assert!(spine >= 1, "the spine needs a node");
    let leaves = offsets.len();
    let mut parent = Vec::with_capacity(leaves + spine);
    for (leaf, &offset) in offsets.iter().enumerate() {
        if offset >= spine {
            return Err(TreesError::InvalidOffset { leaf, offset, spine });
        }
        parent.push(leaves + offset);
    }
    for i in 0..spine {
        parent.push(leaves + (i + 1).min(spine - 1));
    }
    Ok(identity(parent))
}

/// Complete `k`-ary tree with all leaves at depth `depth`, in heap order
/// (node `i > 0` has parent `(i − 1)/k`).
pub fn make_complete_kary(k: usize, depth: u32) -> Tree {
    assert!(k >= 1, "arity must be at least 1");
    let n = (0..=depth).map(|d| k.pow(d)).sum();
    make_kary_heap(k, n)
}

/// The first `n` nodes of the infinite `k`-ary heap: a complete `k`-ary tree
/// whose last level is filled from the left.
pub fn make_kary_heap(k: usize, n: usize) -> Tree {
    assert!(k >= 1 && n >= 1, "need k ≥ 1 and n ≥ 1");
    identity((0..n).map(|i| if i == 0 { 0 } else { (i - 1) / k }).collect())
}

/// Random recursive tree: node `i > 0` picks its parent uniformly from
/// `0..i`.
pub fn make_random_tree(n: usize, seed: u64) -> Tree {
    assert!(n >= 1, "a tree needs a node");
    let mut rng = global_rng(seed);
    identity((0..n).map(|i| if i == 0 { 0 } else { rng.gen_range(0..i) }).collect())
}

/// Named tree shapes, sized by total node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeFamily {
    Path,
    Star,
    /// Spine of `⌈n/2⌉` nodes, the remaining nodes as leaves at random spine
    /// positions.
    Caterpillar,
    /// Complete `k`-ary tree with the last level filled from the left.
    Kary(usize),
    /// Random recursive tree.
    Random,
}

impl TreeFamily {
    /// The families of the correctness sweeps.
    pub const SWEEP: [TreeFamily; 5] =
        [TreeFamily::Path, TreeFamily::Star, TreeFamily::Caterpillar, TreeFamily::Kary(3), TreeFamily::Random];

    /// Shape for `n` nodes with a random labeling; both drawn from `seed`.
    pub fn generate(self, n: usize, seed: u64) -> Tree {
        let shape = match self {
            TreeFamily::Path => make_path(n),
            TreeFamily::Star => make_star(n),
            TreeFamily::Caterpillar => {
                let spine = n.div_ceil(2).max(1);
                let mut rng = global_rng(seed);
                let offsets: Vec<usize> = (0..n - spine).map(|_| rng.gen_range(0..spine)).collect();
                make_caterpillar(spine, &offsets).expect("offsets drawn inside the spine")
            }
            TreeFamily::Kary(k) => make_kary_heap(k, n),
            TreeFamily::Random => make_random_tree(n, seed),
        };
        shape.with_random_labels(derive_seed(seed, 1))
    }
}

impl core::fmt::Display for TreeFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TreeFamily::Path => f.write_str("path"),
            TreeFamily::Star => f.write_str("star"),
            TreeFamily::Caterpillar => f.write_str("caterpillar"),
            TreeFamily::Kary(k) => write!(f, "kary{k}"),
            TreeFamily::Random => f.write_str("random"),
        }
    }
}

impl core::str::FromStr for TreeFamily {
    type Err = UnknownFamily;

    /// Accepts `path`, `star`, `caterpillar`, `random` and `kary<k>` (`kary`
    /// alone means `k = 3`).
    fn from_str(s: &str) -> Result<Self, UnknownFamily> {
        Ok(match s {
            "path" => TreeFamily::Path,
            "star" => TreeFamily::Star,
            "caterpillar" => TreeFamily::Caterpillar,
            "random" => TreeFamily::Random,
            "kary" => TreeFamily::Kary(3),
            _ => match s.strip_prefix("kary").and_then(|k| k.parse().ok()) {
                Some(k) if k >= 1 => TreeFamily::Kary(k),
                _ => return Err(UnknownFamily),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown tree family (expected path, star, caterpillar, kary<k> or random)")]
pub struct UnknownFamily;
