#![allow(dead_code)]

pub mod brute;

use cart_core::data::{FeatureDistribution, SparseTarget};
use cart_core::oracle::{Partition, PopulationProblem};
use rand::seq::index::sample;
use rand::Rng;

/// A random problem on `d` coordinates with up to `max_r` relevant ones.
/// About a third of the problems carry a correlated block, some with
/// zero-probability entries.
pub fn random_problem<R: Rng>(rng: &mut R, d: usize, max_r: usize) -> PopulationProblem {
    let r = rng.random_range(0..=max_r.min(d));
    let mut relevant = sample(rng, d, r).into_vec();
    relevant.sort_unstable();
    let table: Vec<f64> = (0..1 << r).map(|_| rng.random_range(-0.5..=0.5)).collect();
    let target = SparseTarget::new(d, relevant, table).unwrap();
    let p: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
    let dist = if d >= 2 && rng.random_bool(1.0 / 3.0) {
        let k = rng.random_range(2..=d.min(4));
        let block = sample(rng, d, k).into_vec();
        let mut table: Vec<f64> = (0..1 << k)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        table[0] += 0.01;
        let total: f64 = table.iter().sum();
        table.iter_mut().for_each(|v| *v /= total);
        let fix: f64 = table[1..].iter().sum();
        table[0] = 1.0 - fix;
        FeatureDistribution::block_correlated(p, block, table).unwrap()
    } else {
        FeatureDistribution::product(p).unwrap()
    };
    PopulationProblem::new(dist, target).unwrap()
}

/// A random partition grown by `splits` cell splits on free coordinates.
pub fn random_partition<R: Rng>(rng: &mut R, d: usize, splits: usize) -> Partition {
    let mut part = Partition::trivial(d);
    for _ in 0..splits {
        let idx = rng.random_range(0..part.len());
        let free: Vec<usize> = (0..d).filter(|&i| !part.cells()[idx].is_fixed(i)).collect();
        if free.is_empty() {
            continue;
        }
        let coord = free[rng.random_range(0..free.len())];
        part = part.split_cell(idx, coord).unwrap();
    }
    part
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
