use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::global_rng;

/// Validation failures for [`Tree::new`] and [`build_tree`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("tree must have at least one node")]
    Empty,
    #[error("nodes {0} and {1} are both roots")]
    MultipleRoots(usize, usize),
    #[error("node {0} lies on a parent cycle")]
    CycleDetected(usize),
    #[error("node {0} points to parent {1}, which does not exist")]
    UnreachableNode(usize, usize),
    #[error("labels are not a bijection onto 0..{0}")]
    LabelsNotBijective(usize),
}

/// A rooted tree with every edge directed towards the root, together with a
/// bijective labeling of its nodes by `0..n`.
///
/// Node ids are positions in `parent`; labels are what protocols see. The
/// root is the unique node that is its own parent.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "RawTree", into = "RawTree")
)]
pub struct Tree {
    parent: Vec<usize>,
    label: Vec<usize>,
    cache: Derived,
}

/// Serialized form: the parent array and the labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawTree {
    pub parent: Vec<usize>,
    pub label: Vec<usize>,
}

impl TryFrom<RawTree> for Tree {
    type Error = TreeError;

    fn try_from(raw: RawTree) -> Result<Self, TreeError> {
        Tree::new(raw.parent, raw.label)
    }
}

impl From<Tree> for RawTree {
    fn from(t: Tree) -> Self {
        RawTree { parent: t.parent, label: t.label }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Derived {
    root: usize,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    // nodes in non-decreasing depth order, root first
    order: Vec<usize>,
    node_of_label: Vec<usize>,
}

impl Tree {
    /// Validates a parent array and a labeling.
    pub fn new(parent: Vec<usize>, label: Vec<usize>) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        let mut root = None;
        for (v, &p) in parent.iter().enumerate() {
            if p >= n {
                return Err(TreeError::UnreachableNode(v, p));
            }
            if p == v {
                if let Some(r) = root {
                    return Err(TreeError::MultipleRoots(r, v));
                }
                root = Some(v);
            }
        }
        // Walk each node up the parent chain. 0 = unvisited, 1 = on the
        // current walk, 2 = known to reach the root.
        let mut mark = vec![0u8; n];
        let mut walk = Vec::new();
        for start in 0..n {
            let mut v = start;
            while mark[v] == 0 && parent[v] != v {
                mark[v] = 1;
                walk.push(v);
                v = parent[v];
            }
            if mark[v] == 1 {
                return Err(TreeError::CycleDetected(v));
            }
            for u in walk.drain(..) {
                mark[u] = 2;
            }
            mark[v] = 2;
        }
        // every parent chain ended at a fixed point, so one exists
        let root = root.expect("acyclic parent map has a root");

        if label.len() != n {
            return Err(TreeError::LabelsNotBijective(n));
        }
        let mut node_of_label = vec![usize::MAX; n];
        for (v, &l) in label.iter().enumerate() {
            if l >= n || node_of_label[l] != usize::MAX {
                return Err(TreeError::LabelsNotBijective(n));
            }
            node_of_label[l] = v;
        }

        let mut children = vec![Vec::new(); n];
        for (v, &p) in parent.iter().enumerate() {
            if v != p {
                children[p].push(v);
            }
        }
        let mut depth = vec![0; n];
        let mut order = Vec::with_capacity(n);
        order.push(root);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                order.push(c);
            }
            i += 1;
        }
        Ok(Tree {
            parent,
            label,
            cache: Derived { root, children, depth, order, node_of_label },
        })
    }

    /// Tree with node `v` labelled `v`.
    pub fn with_identity_labels(parent: Vec<usize>) -> Result<Self, TreeError> {
        let n = parent.len();
        Self::new(parent, (0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.cache.root
    }

    /// Parent of `v`; the root is its own parent.
    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn label(&self, v: usize) -> usize {
        self.label[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.label
    }

    pub fn node_of_label(&self, label: usize) -> usize {
        self.cache.node_of_label[label]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.cache.children[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.cache.children[v].is_empty()
    }

    pub fn depth(&self, v: usize) -> usize {
        self.cache.depth[v]
    }

    pub fn max_depth(&self) -> usize {
        self.cache.depth.iter().copied().max().unwrap_or(0)
    }

    /// Nodes ordered root first, parents before children.
    pub fn top_down(&self) -> &[usize] {
        &self.cache.order
    }

    /// Nodes ordered children before parents.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> + '_ {
        self.cache.order.iter().rev().copied()
    }

    /// Sizes of all subtrees `|T_v|`.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1; self.n()];
        for v in self.bottom_up() {
            if v != self.root() {
                size[self.parent[v]] += size[v];
            }
        }
        size
    }

    /// Same shape, labels replaced.
    pub fn relabeled(&self, label: Vec<usize>) -> Result<Self, TreeError> {
        Self::new(self.parent.clone(), label)
    }

    /// Same shape with a uniformly random labeling drawn from `seed`.
    pub fn with_random_labels(&self, seed: u64) -> Self {
        let label = random_permutation(self.n(), seed);
        self.relabeled(label).expect("a permutation is a bijection")
    }
}

pub(crate) fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut global_rng(seed));
    perm
}

/// Builds a tree from a parent array; when `labels` is absent a random
/// permutation drawn from `seed` is assigned.
pub fn build_tree(parents: &[usize], labels: Option<&[usize]>, seed: u64) -> Result<Tree, TreeError> {
    let label = match labels {
        Some(l) => l.to_vec(),
        None => random_permutation(parents.len(), seed),
    };
    Tree::new(parents.to_vec(), label)
}
