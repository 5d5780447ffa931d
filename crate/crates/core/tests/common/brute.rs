//! Naive reference implementations: every quantity is a sum over all `2^d`
//! points of the cube, written straight from its definition.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cart_core::data::{Dataset, FeatureDistribution, SparseTarget};
use cart_core::oracle::{Cell, Partition};

/// One point of the cube with its probability and target value.
pub struct Point {
    pub x: Vec<bool>,
    pub p: f64,
    pub m: f64,
}

pub fn words(x: &[bool]) -> Vec<u64> {
    let mut w = vec![0u64; x.len().div_ceil(64).max(1)];
    for (i, &b) in x.iter().enumerate() {
        if b {
            w[i / 64] |= 1 << (i % 64);
        }
    }
    w
}

pub fn probability(dist: &FeatureDistribution, x: &[bool]) -> f64 {
    let block = dist.block_coords();
    let mut p = 1.0;
    for (i, &b) in x.iter().enumerate() {
        if block.contains(&i) {
            continue;
        }
        let q = dist.product_params()[i];
        p *= if b { q } else { 1.0 - q };
    }
    if let Some(b) = dist.block() {
        let idx: usize = b
            .coords()
            .iter()
            .enumerate()
            .map(|(k, &c)| usize::from(x[c]) << k)
            .sum();
        p *= b.table()[idx];
    }
    p
}

pub fn value(target: &SparseTarget, x: &[bool]) -> f64 {
    let idx: usize = target
        .relevant()
        .iter()
        .enumerate()
        .map(|(k, &c)| usize::from(x[c]) << k)
        .sum();
    target.table()[idx]
}

pub fn points(dist: &FeatureDistribution, target: &SparseTarget) -> Vec<Point> {
    let d = dist.dim();
    (0..1u64 << d)
        .map(|idx| {
            let x: Vec<bool> = (0..d).map(|i| (idx >> i) & 1 == 1).collect();
            Point {
                p: probability(dist, &x),
                m: value(target, &x),
                x,
            }
        })
        .collect()
}

fn in_cell(cell: &Cell, x: &[bool]) -> bool {
    cell.constraints().iter().all(|&(c, b)| x[c] == b)
}

fn key(x: &[bool], coords: &[usize]) -> Vec<bool> {
    coords.iter().map(|&c| x[c]).collect()
}

/// `(mass, Σ p m)` of every nonempty group of `x_coords` inside `cell`.
fn groups(pts: &[Point], cell: &Cell, coords: &[usize]) -> Vec<(f64, f64)> {
    let mut g: BTreeMap<Vec<bool>, (f64, f64)> = BTreeMap::new();
    for pt in pts.iter().filter(|pt| in_cell(cell, &pt.x)) {
        let e = g.entry(key(&pt.x, coords)).or_default();
        e.0 += pt.p;
        e.1 += pt.p * pt.m;
    }
    g.into_values().collect()
}

pub fn mass(pts: &[Point], cell: &Cell) -> f64 {
    pts.iter()
        .filter(|pt| in_cell(cell, &pt.x))
        .map(|pt| pt.p)
        .sum()
}

pub fn second_moment(pts: &[Point]) -> f64 {
    pts.iter().map(|pt| pt.p * pt.m * pt.m).sum()
}

pub fn vbar(pts: &[Point], d: usize, splits: &[usize]) -> f64 {
    groups(pts, &Cell::root(d), splits)
        .into_iter()
        .filter(|&(w, _)| w > 0.0)
        .map(|(w, s)| s * s / w)
        .sum()
}

pub fn lbar(pts: &[Point], d: usize, splits: &[usize]) -> f64 {
    let root = Cell::root(d);
    let means: BTreeMap<Vec<bool>, f64> = {
        let mut g: BTreeMap<Vec<bool>, (f64, f64)> = BTreeMap::new();
        for pt in pts {
            let e = g.entry(key(&pt.x, splits)).or_default();
            e.0 += pt.p;
            e.1 += pt.p * pt.m;
        }
        g.into_iter()
            .filter(|(_, (w, _))| *w > 0.0)
            .map(|(k, (w, s))| (k, s / w))
            .collect()
    };
    pts.iter()
        .filter(|pt| pt.p > 0.0 && in_cell(&root, &pt.x))
        .map(|pt| pt.p * (pt.m - means[&key(&pt.x, splits)]).powi(2))
        .sum()
}

pub fn vbar_leaf(pts: &[Point], cell: &Cell, dirs: &[usize]) -> f64 {
    let w = mass(pts, cell);
    if w == 0.0 {
        return 0.0;
    }
    groups(pts, cell, dirs)
        .into_iter()
        .filter(|&(g, _)| g > 0.0)
        .map(|(g, s)| s * s / g)
        .sum::<f64>()
        / w
}

pub fn lbar_leaf(pts: &[Point], cell: &Cell, dirs: &[usize]) -> f64 {
    let w = mass(pts, cell);
    if w == 0.0 {
        return 0.0;
    }
    let second: f64 = pts
        .iter()
        .filter(|pt| in_cell(cell, &pt.x))
        .map(|pt| pt.p * pt.m * pt.m)
        .sum::<f64>()
        / w;
    second - vbar_leaf(pts, cell, dirs)
}

pub fn vbar_partition(pts: &[Point], partition: &Partition) -> f64 {
    partition
        .cells()
        .iter()
        .map(|a| {
            let w = mass(pts, a);
            let s: f64 = pts
                .iter()
                .filter(|pt| in_cell(a, &pt.x))
                .map(|pt| pt.p * pt.m)
                .sum();
            if w > 0.0 {
                s * s / w
            } else {
                0.0
            }
        })
        .sum()
}

pub fn lbar_partition(pts: &[Point], partition: &Partition) -> f64 {
    partition
        .cells()
        .iter()
        .map(|a| {
            let w = mass(pts, a);
            if w == 0.0 {
                return 0.0;
            }
            let mean: f64 = pts
                .iter()
                .filter(|pt| in_cell(a, &pt.x))
                .map(|pt| pt.p * pt.m)
                .sum::<f64>()
                / w;
            pts.iter()
                .filter(|pt| in_cell(a, &pt.x))
                .map(|pt| pt.p * (pt.m - mean).powi(2))
                .sum::<f64>()
        })
        .sum()
}

pub fn value_diameter(pts: &[Point], cell: &Cell) -> f64 {
    let vals: Vec<f64> = pts
        .iter()
        .filter(|pt| pt.p > 0.0 && in_cell(cell, &pt.x))
        .map(|pt| pt.m)
        .collect();
    if vals.is_empty() {
        return 0.0;
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo).powi(2)
}

/// `V_n(S)` straight from the definition: for each sample, the mean response
/// over samples agreeing with it on `S`, squared and averaged.
pub fn empirical_v(data: &Dataset, splits: &[usize]) -> f64 {
    let n = data.len();
    let mut total = 0.0;
    for j in 0..n {
        let (mut c, mut s) = (0usize, 0.0);
        for k in 0..n {
            if splits.iter().all(|&i| data.bit(j, i) == data.bit(k, i)) {
                c += 1;
                s += data.y()[k];
            }
        }
        let g = s / c as f64;
        total += g * g;
    }
    total / n as f64
}

/// `V_n^ℓ(A, i) = Σ_z (N(A_z) / N(A)) g(A_z)²`, each subcell scanned on its
/// own.
pub fn empirical_v_leaf(data: &Dataset, cell: &Cell, coord: usize) -> f64 {
    let inside = |j: usize| cell.constraints().iter().all(|&(c, b)| data.bit(j, c) == b);
    let total = (0..data.len()).filter(|&j| inside(j)).count();
    let mut v = 0.0;
    for z in [false, true] {
        let members: Vec<usize> = (0..data.len())
            .filter(|&j| inside(j) && data.bit(j, coord) == z)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &j in &members {
            s += data.y()[j];
        }
        let g = s / members.len() as f64;
        v += (members.len() as f64 / total as f64) * (g * g);
    }
    v
}
