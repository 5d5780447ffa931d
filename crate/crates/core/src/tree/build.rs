use super::criteria::leaf_criterion;
use super::{Budget, BuildConfig, Tree, TreeNode, Variant};
use crate::data::{honest_split_indices, Dataset};
use crate::oracle::SplitSet;
use crate::select::argmax_random;
use crate::{Error, Result};

/// Tree topology under construction; node 0 is the root.
struct Topology {
    nodes: Vec<Option<(usize, [usize; 2])>>,
}

impl Topology {
    fn new() -> Self {
        Self { nodes: vec![None] }
    }

    fn split(&mut self, node: usize, coord: usize) -> [usize; 2] {
        let c0 = self.nodes.len();
        self.nodes.push(None);
        self.nodes.push(None);
        self.nodes[node] = Some((coord, [c0, c0 + 1]));
        [c0, c0 + 1]
    }
}

/// Sample positions that drive split selection and those that gate splits
/// and fill leaves.
struct Roles {
    structure: Vec<usize>,
    estimation: Vec<usize>,
}

fn roles(data: &Dataset, config: &BuildConfig) -> Result<Roles> {
    if config.honest {
        let (structure, estimation) = honest_split_indices(data.len(), config.seed)?;
        Ok(Roles {
            structure,
            estimation,
        })
    } else {
        if data.is_empty() {
            return Err(Error::InsufficientSamples {
                required: 1,
                actual: 0,
            });
        }
        let all: Vec<usize> = (0..data.len()).collect();
        Ok(Roles {
            structure: all.clone(),
            estimation: all,
        })
    }
}

fn split_by(data: &Dataset, members: &[usize], coord: usize) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for &j in members {
        out[usize::from(data.bit(j, coord))].push(j);
    }
    out
}

/// One coordinate per level, chosen to maximize `V_n(S ∪ {i})` on the
/// structure samples and applied to every cell whose two subcells both hold
/// a gating sample.
pub fn build_level_split(data: &Dataset, config: &BuildConfig) -> Result<Tree> {
    let d = data.dim();
    let (max_levels, fully) = match config.budget {
        Budget::Limit(l) if l > d => {
            return Err(Error::InvalidConfig(format!(
                "level budget {l} exceeds dimension {d}"
            )))
        }
        Budget::Limit(l) => (l, false),
        Budget::FullyGrown => (d, true),
    };
    let roles = roles(data, config)?;
    let y = data.y();
    let n_struct = roles.structure.len() as f64;

    let mut topo = Topology::new();
    let mut leaves: Vec<(usize, Vec<usize>)> = vec![(0, roles.estimation.clone())];
    let mut group = vec![0usize; roles.structure.len()];
    let mut n_groups = 1usize;
    let mut splits = SplitSet::empty();
    let mut counts: Vec<usize> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();

    for level in 0..max_levels {
        if fully && leaves.iter().all(|(_, g)| g.len() <= 3) {
            break;
        }
        let candidates: Vec<usize> = (0..d).filter(|&i| !splits.contains(i)).collect();
        let mut values = Vec::with_capacity(candidates.len());
        for &i in &candidates {
            counts.clear();
            counts.resize(2 * n_groups, 0);
            sums.clear();
            sums.resize(2 * n_groups, 0.0);
            for (k, &j) in roles.structure.iter().enumerate() {
                let slot = 2 * group[k] + usize::from(data.bit(j, i));
                counts[slot] += 1;
                sums[slot] += y[j];
            }
            let v = counts
                .iter()
                .zip(&sums)
                .filter(|(&c, _)| c > 0)
                .fold(0.0, |acc, (&c, &s)| acc + s * s / c as f64);
            values.push(v / n_struct);
        }
        let mut rng = config.seed.rng("level", level as u64);
        let coord = candidates[argmax_random(&values, &mut rng).expect("candidates are nonempty")];

        let mut next = Vec::with_capacity(leaves.len() * 2);
        for (node, gating) in leaves {
            let [g0, g1] = split_by(data, &gating, coord);
            if !g0.is_empty() && !g1.is_empty() && (!fully || gating.len() >= 4) {
                let [c0, c1] = topo.split(node, coord);
                next.push((c0, g0));
                next.push((c1, g1));
            } else {
                next.push((node, gating));
            }
        }
        leaves = next;

        let mut remap = vec![usize::MAX; 2 * n_groups];
        let mut fresh = 0;
        for (k, &j) in roles.structure.iter().enumerate() {
            let slot = 2 * group[k] + usize::from(data.bit(j, coord));
            if remap[slot] == usize::MAX {
                remap[slot] = fresh;
                fresh += 1;
            }
            group[k] = remap[slot];
        }
        n_groups = fresh.max(1);
        splits.push(coord)?;
    }
    Ok(finalize(
        data,
        &topo,
        &roles,
        Variant::LevelSplit,
        config.honest,
        Some(splits),
    ))
}

/// Breadth-first per-cell splitting on `V_n^ℓ(A, i)`, with at most `t`
/// leaves.
///
/// A cell is a candidate for splitting when it holds at least two gating
/// samples (four when fully grown). Only coordinates that leave a gating
/// sample on both sides are eligible; when the cell has no structure samples
/// every eligible coordinate scores zero and the choice is uniform.
pub fn build_breiman(data: &Dataset, config: &BuildConfig) -> Result<Tree> {
    let d = data.dim();
    let (max_leaves, min_gating) = match config.budget {
        Budget::Limit(0) => {
            return Err(Error::InvalidConfig(
                "node budget must be at least 1".into(),
            ))
        }
        Budget::Limit(t) => (t, 2),
        Budget::FullyGrown => (usize::MAX, 4),
    };
    let roles = roles(data, config)?;
    let y = data.y();

    struct Work {
        node: usize,
        fixed: Vec<bool>,
        structure: Vec<usize>,
        gating: Vec<usize>,
    }

    let mut topo = Topology::new();
    let mut level = vec![Work {
        node: 0,
        fixed: vec![false; d],
        structure: roles.structure.clone(),
        gating: roles.estimation.clone(),
    }];
    let mut leaves = 1usize;
    let mut visited = 0u64;
    while !level.is_empty() && leaves < max_leaves {
        let mut next = Vec::with_capacity(level.len() * 2);
        for w in level {
            if leaves >= max_leaves || w.gating.len() < min_gating {
                continue;
            }
            let mut gating_ones = vec![0usize; d];
            for &j in &w.gating {
                let row = data.row(j);
                for (i, ones) in gating_ones.iter_mut().enumerate() {
                    if !w.fixed[i] && crate::bits::get_bit(row, i) {
                        *ones += 1;
                    }
                }
            }
            let admissible: Vec<usize> = (0..d)
                .filter(|&i| !w.fixed[i] && gating_ones[i] > 0 && gating_ones[i] < w.gating.len())
                .collect();
            if admissible.is_empty() {
                continue;
            }
            let values: Vec<f64> = admissible
                .iter()
                .map(|&i| {
                    let mut counts = [0usize; 2];
                    let mut sums = [0.0; 2];
                    for &j in &w.structure {
                        let z = usize::from(data.bit(j, i));
                        counts[z] += 1;
                        sums[z] += y[j];
                    }
                    leaf_criterion(counts, sums)
                })
                .collect();
            let mut rng = config.seed.rng("node", visited);
            visited += 1;
            let coord =
                admissible[argmax_random(&values, &mut rng).expect("admissible is nonempty")];
            let children = topo.split(w.node, coord);
            let [s0, s1] = split_by(data, &w.structure, coord);
            let [g0, g1] = split_by(data, &w.gating, coord);
            let mut fixed = w.fixed;
            fixed[coord] = true;
            next.push(Work {
                node: children[0],
                fixed: fixed.clone(),
                structure: s0,
                gating: g0,
            });
            next.push(Work {
                node: children[1],
                fixed,
                structure: s1,
                gating: g1,
            });
            leaves += 1;
        }
        level = next;
    }
    Ok(finalize(
        data,
        &topo,
        &roles,
        Variant::Breiman,
        config.honest,
        None,
    ))
}

/// Routes samples down the topology and emits the preorder arena. Leaf values
/// average the estimation responses in sample order.
fn finalize(
    data: &Dataset,
    topo: &Topology,
    roles: &Roles,
    variant: Variant,
    honest: bool,
    split_order: Option<SplitSet>,
) -> Tree {
    let route = |members: &[usize]| -> (Vec<usize>, Vec<f64>) {
        let mut counts = vec![0usize; topo.nodes.len()];
        let mut sums = vec![0.0; topo.nodes.len()];
        for &j in members {
            let mut node = 0;
            loop {
                counts[node] += 1;
                match topo.nodes[node] {
                    Some((coord, children)) => node = children[usize::from(data.bit(j, coord))],
                    None => {
                        sums[node] += data.y()[j];
                        break;
                    }
                }
            }
        }
        (counts, sums)
    };
    let (n_est, est_sums) = route(&roles.estimation);
    let (n_struct, _) = route(&roles.structure);

    let mut nodes = Vec::with_capacity(topo.nodes.len());
    let mut stack = vec![(0usize, None::<(usize, usize)>)];
    while let Some((node, parent)) = stack.pop() {
        let index = nodes.len();
        if let Some((p, side)) = parent {
            if let TreeNode::Internal { children, .. } = &mut nodes[p] {
                children[side] = index as u32;
            }
        }
        match topo.nodes[node] {
            Some((coord, [c0, c1])) => {
                nodes.push(TreeNode::Internal {
                    coord,
                    children: [0, 0],
                    n_estimation: n_est[node],
                    n_structure: n_struct[node],
                });
                stack.push((c1, Some((index, 1))));
                stack.push((c0, Some((index, 0))));
            }
            None => nodes.push(TreeNode::Leaf {
                value: est_sums[node] / n_est[node] as f64,
                n_estimation: n_est[node],
                n_structure: n_struct[node],
            }),
        }
    }
    Tree {
        variant,
        honest,
        d: data.dim(),
        split_order,
        nodes,
    }
}
