//! Empirical split criteria and the split-set estimator.
//!
//! Sums run over samples in index order, so results are reproducible to the
//! last bit and agree with a direct per-sample evaluation of the definitions.

use std::collections::HashMap;

use crate::bits::{get_bit, words_for};
use crate::data::Dataset;
use crate::oracle::{Cell, SplitSet};
use crate::{Error, Result};

fn check_splits(splits: &SplitSet, d: usize) -> Result<()> {
    match splits.coords().iter().find(|&&c| c >= d) {
        Some(&c) => Err(Error::InvalidPartition(format!(
            "coordinate {} outside dimension {d}",
            c + 1
        ))),
        None => Ok(()),
    }
}

/// Group index of every sample under the key `x_S`, plus per-group count and
/// response sum.
fn group_by_splits(splits: &SplitSet, data: &Dataset) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let k = splits.len();
    let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut member = Vec::with_capacity(data.len());
    let mut counts = Vec::new();
    let mut sums = Vec::new();
    let mut key = vec![0u64; words_for(k)];
    for j in 0..data.len() {
        key.iter_mut().for_each(|w| *w = 0);
        for (pos, &c) in splits.coords().iter().enumerate() {
            if data.bit(j, c) {
                key[pos / 64] |= 1 << (pos % 64);
            }
        }
        let next = ids.len();
        let g = *ids.entry(key.clone()).or_insert(next);
        if g == counts.len() {
            counts.push(0);
            sums.push(0.0);
        }
        counts[g] += 1;
        sums[g] += data.y()[j];
        member.push(g);
    }
    (member, counts, sums)
}

/// `V_n(S) = (1/n) Σ_j m_n(x^(j); S)²`.
pub fn empirical_v(splits: &SplitSet, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_splits(splits, data.dim())?;
    let (member, counts, sums) = group_by_splits(splits, data);
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let total = member.iter().fold(0.0, |acc, &g| acc + means[g] * means[g]);
    Ok(total / data.len() as f64)
}

/// `L_n(S) = (1/n) Σ_j (y^(j))² − V_n(S)`.
pub fn empirical_l(splits: &SplitSet, data: &Dataset) -> Result<f64> {
    let v = empirical_v(splits, data)?;
    let sq = data.y().iter().fold(0.0, |acc, y| acc + y * y);
    Ok(sq / data.len() as f64 - v)
}

/// Estimate at `x` from the split sequence `S`: walk the splits in order,
/// keeping only samples that agree with `x` on each split unless that would
/// leave none, then average the surviving responses.
pub fn estimate_with_splits(words: &[u64], splits: &SplitSet, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_splits(splits, data.dim())?;
    let mut alive: Vec<usize> = (0..data.len()).collect();
    for &c in splits.coords() {
        let bit = get_bit(words, c);
        let kept: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&j| data.bit(j, c) == bit)
            .collect();
        if !kept.is_empty() {
            alive = kept;
        }
    }
    Ok(mean_of(data.y(), &alive))
}

pub(crate) fn mean_of(y: &[f64], members: &[usize]) -> f64 {
    let sum = members.iter().fold(0.0, |acc, &j| acc + y[j]);
    sum / members.len() as f64
}

/// `Σ_z (N_z / N) g_z²` for a cut into two subcells with the given counts and
/// response sums; empty subcells contribute nothing.
#[inline]
pub(crate) fn leaf_criterion(counts: [usize; 2], sums: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n == 0 {
        return 0.0;
    }
    let mut v = 0.0;
    for z in 0..2 {
        if counts[z] > 0 {
            let g = sums[z] / counts[z] as f64;
            v += (counts[z] as f64 / n as f64) * (g * g);
        }
    }
    v
}

/// `V_n^ℓ(A, i)`: explained heterogeneity of cutting cell `A` on `i`,
/// measured on the samples inside `A`.
pub fn empirical_v_leaf(cell: &Cell, coord: usize, data: &Dataset) -> Result<f64> {
    if cell.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            actual: cell.dim(),
        });
    }
    if coord >= data.dim() {
        return Err(Error::InvalidPartition(format!(
            "coordinate {} outside dimension {}",
            coord + 1,
            data.dim()
        )));
    }
    let mut counts = [0usize; 2];
    let mut sums = [0.0; 2];
    for j in 0..data.len() {
        if cell.contains(data.row(j)) {
            let z = usize::from(data.bit(j, coord));
            counts[z] += 1;
            sums[z] += data.y()[j];
        }
    }
    if counts[0] + counts[1] == 0 {
        return Err(Error::EmptyCell);
    }
    Ok(leaf_criterion(counts, sums))
}
