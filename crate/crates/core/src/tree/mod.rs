//! Finite-sample greedy trees: level-split trees that share one split
//! coordinate per level, and per-cell (Breiman) trees.
//!
//! A tree is stored as a flat arena in preorder. Internal nodes route a point
//! to `children[x_coord]`; leaves hold the average estimation response.
//! Honest trees choose splits on one half of the data and fill leaves from
//! the other half. Non-honest trees use the full sample for both.

mod build;
mod criteria;

use serde::{Deserialize, Serialize};

use crate::bits::{get_bit, words_for};
use crate::data::Dataset;
use crate::oracle::{Cell, Partition, PopulationProblem, SplitSet};
use crate::seed::SeedSpec;
use crate::{Error, Result};

pub use build::{build_breiman, build_level_split};
#[cfg(test)]
use criteria::mean_of;
pub use criteria::{empirical_l, empirical_v, empirical_v_leaf, estimate_with_splits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    LevelSplit,
    Breiman,
}

/// Size budget: levels for level-split trees, leaves for Breiman trees.
///
/// Serialized as `"fully_grown"` or `{"limit": n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Limit(usize),
    /// Keep splitting while a cell holds at least four gating samples.
    FullyGrown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildConfig {
    pub budget: Budget,
    pub honest: bool,
    pub seed: SeedSpec,
}

impl BuildConfig {
    pub fn new(budget: Budget, honest: bool, seed: impl Into<SeedSpec>) -> Self {
        Self {
            budget,
            honest,
            seed: seed.into(),
        }
    }
}

/// Fits a tree of the given variant.
pub fn build(variant: Variant, data: &Dataset, config: &BuildConfig) -> Result<Tree> {
    match variant {
        Variant::LevelSplit => build_level_split(data, config),
        Variant::Breiman => build_breiman(data, config),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal {
        coord: usize,
        children: [u32; 2],
        n_estimation: usize,
        n_structure: usize,
    },
    Leaf {
        value: f64,
        n_estimation: usize,
        n_structure: usize,
    },
}

impl TreeNode {
    pub fn n_estimation(&self) -> usize {
        match *self {
            TreeNode::Internal { n_estimation, .. } | TreeNode::Leaf { n_estimation, .. } => {
                n_estimation
            }
        }
    }

    pub fn n_structure(&self) -> usize {
        match *self {
            TreeNode::Internal { n_structure, .. } | TreeNode::Leaf { n_structure, .. } => {
                n_structure
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct Tree {
    variant: Variant,
    honest: bool,
    d: usize,
    split_order: Option<SplitSet>,
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn is_honest(&self) -> bool {
        self.honest
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Coordinates chosen level by level (level-split trees only).
    pub fn split_order(&self) -> Option<&SplitSet> {
        self.split_order.as_ref()
    }

    /// Nodes in preorder; index 0 is the root.
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { children, .. } => {
                    1 + go(nodes, children[0] as usize).max(go(nodes, children[1] as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }

    /// Index of the leaf containing `words`.
    pub fn leaf_index(&self, words: &[u64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Internal {
                    coord, children, ..
                } => i = children[usize::from(get_bit(words, coord))] as usize,
            }
        }
    }

    pub fn predict(&self, words: &[u64]) -> f64 {
        match self.nodes[self.leaf_index(words)] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Internal { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Checked prediction for a point of the tree's dimension.
    pub fn predict_checked(&self, words: &[u64]) -> Result<f64> {
        if words.len() != words_for(self.d) {
            return Err(Error::DimensionMismatch {
                expected: words_for(self.d),
                actual: words.len(),
            });
        }
        Ok(self.predict(words))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        (0..data.len()).map(|j| self.predict(data.row(j))).collect()
    }

    /// Leaf cells in preorder, paired with [`Tree::leaf_values`].
    pub fn partition(&self) -> Partition {
        let mut cells = Vec::with_capacity(self.n_leaves());
        let mut stack = vec![(0usize, Cell::root(self.d))];
        while let Some((i, cell)) = stack.pop() {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => cells.push(cell),
                TreeNode::Internal {
                    coord, children, ..
                } => {
                    let [c0, c1] = cell
                        .split(coord)
                        .expect("tree splits are on free coordinates");
                    stack.push((children[1] as usize, c1));
                    stack.push((children[0] as usize, c0));
                }
            }
        }
        Partition::from_cells_unchecked(self.d, cells)
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                TreeNode::Leaf { value, .. } => Some(value),
                TreeNode::Internal { .. } => None,
            })
            .collect()
    }

    /// Exact `E_x[(m(x) − f(x))²]` under the problem's distribution.
    pub fn population_mse(&self, problem: &PopulationProblem) -> Result<f64> {
        if problem.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                actual: self.d,
            });
        }
        let values: Vec<Option<f64>> = self.leaf_values().into_iter().map(Some).collect();
        problem.estimator_population_mse(&self.partition(), &values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRepr {
    variant: Variant,
    honest: bool,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split_order: Option<Vec<usize>>,
    nodes: Vec<NodeRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coord: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf_value: Option<f64>,
    n_estimation: usize,
    n_structure: usize,
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> Self {
        TreeRepr {
            variant: t.variant,
            honest: t.honest,
            d: t.d,
            split_order: t
                .split_order
                .map(|s| s.coords().iter().map(|c| c + 1).collect()),
            nodes: t
                .nodes
                .iter()
                .map(|n| match *n {
                    TreeNode::Internal {
                        coord,
                        n_estimation,
                        n_structure,
                        ..
                    } => NodeRepr {
                        coord: Some(coord + 1),
                        leaf_value: None,
                        n_estimation,
                        n_structure,
                    },
                    TreeNode::Leaf {
                        value,
                        n_estimation,
                        n_structure,
                    } => NodeRepr {
                        coord: None,
                        leaf_value: Some(value),
                        n_estimation,
                        n_structure,
                    },
                })
                .collect(),
        }
    }
}

impl TryFrom<TreeRepr> for Tree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("tree document: {msg}"));
        let to_zero = |c: usize| {
            if c == 0 || c > r.d {
                Err(bad(format!("coordinate {c} outside 1..={}", r.d)))
            } else {
                Ok(c - 1)
            }
        };
        let split_order = match &r.split_order {
            Some(s) => Some(SplitSet::new(
                s.iter().map(|&c| to_zero(c)).collect::<Result<_>>()?,
            )?),
            None => None,
        };
        let mut nodes = Vec::with_capacity(r.nodes.len());
        for n in &r.nodes {
            nodes.push(match (n.coord, n.leaf_value) {
                (Some(c), None) => TreeNode::Internal {
                    coord: to_zero(c)?,
                    children: [0, 0],
                    n_estimation: n.n_estimation,
                    n_structure: n.n_structure,
                },
                (None, Some(value)) => TreeNode::Leaf {
                    value,
                    n_estimation: n.n_estimation,
                    n_structure: n.n_structure,
                },
                _ => return Err(bad("node needs exactly one of coord, leaf_value".into())),
            });
        }
        // Rebuild child links from preorder; each subtree is contiguous. A
        // path longer than `d` must repeat a coordinate, so stop early there.
        fn link(
            nodes: &mut [TreeNode],
            i: usize,
            depth: usize,
            d: usize,
        ) -> std::result::Result<usize, String> {
            if i >= nodes.len() {
                return Err("truncated node list".into());
            }
            if depth > d {
                return Err("tree deeper than its dimension".into());
            }
            if let TreeNode::Internal { .. } = nodes[i] {
                let left = i + 1;
                let right = link(nodes, left, depth + 1, d)?;
                let end = link(nodes, right, depth + 1, d)?;
                if let TreeNode::Internal { children, .. } = &mut nodes[i] {
                    *children = [left as u32, right as u32];
                }
                Ok(end)
            } else {
                Ok(i + 1)
            }
        }
        let end = link(&mut nodes, 0, 0, r.d).map_err(bad)?;
        if end != nodes.len() {
            return Err(bad("trailing nodes after the root subtree".into()));
        }
        let tree = Tree {
            variant: r.variant,
            honest: r.honest,
            d: r.d,
            split_order,
            nodes,
        };
        // A coordinate may appear at most once on any root-to-leaf path.
        let mut stack = vec![(0usize, Cell::root(tree.d))];
        while let Some((i, cell)) = stack.pop() {
            if let TreeNode::Internal {
                coord, children, ..
            } = tree.nodes[i]
            {
                let [c0, c1] = cell
                    .split(coord)
                    .map_err(|_| bad(format!("coordinate {} repeated on a path", coord + 1)))?;
                stack.push((children[0] as usize, c0));
                stack.push((children[1] as usize, c1));
            }
        }
        Ok(tree)
    }
}
