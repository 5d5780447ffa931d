use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::set_bit;
use crate::{Error, Result};

/// Largest correlated block supported.
pub const MAX_BLOCK: usize = 20;

/// Cap on `|Q ∪ K|` for exact marginal computations.
pub const MARGINAL_CAP: usize = 25;

/// Joint law on `{0,1}^d`: independent Bernoulli coordinates, optionally with
/// one block of coordinates drawn jointly from an explicit probability table.
///
/// Coordinates are 0-based. The block table is indexed by
/// `Σ_k x[block[k]] << k`, so the first listed coordinate is the low bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct FeatureDistribution {
    p: Vec<f64>,
    block: Option<Block>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    coords: Vec<usize>,
    table: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Block {
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can leave the last cumulative value just below 1, or pick a
        // zero-probability entry at a boundary; walk to a positive entry.
        let mut idx = idx.min(self.table.len() - 1);
        while self.table[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        while self.table[idx] == 0.0 {
            idx += 1;
        }
        idx
    }
}

impl FeatureDistribution {
    pub fn product(p: Vec<f64>) -> Result<Self> {
        check_probs(&p)?;
        Ok(Self { p, block: None })
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            p: vec![0.5; d],
            block: None,
        }
    }

    /// Product law on the coordinates outside `block`, joint `table` on the
    /// block. Entries of `p` at block coordinates are ignored.
    pub fn block_correlated(p: Vec<f64>, block: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        check_probs(&p)?;
        let d = p.len();
        if block.is_empty() || block.len() > MAX_BLOCK {
            return Err(Error::InvalidDistribution(format!(
                "block size must be in 1..={MAX_BLOCK}, got {}",
                block.len()
            )));
        }
        let mut seen = vec![false; d];
        for &c in &block {
            if c >= d {
                return Err(Error::InvalidDistribution(format!(
                    "block coordinate {} outside dimension {d}",
                    c + 1
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidDistribution(format!(
                    "block coordinate {} repeated",
                    c + 1
                )));
            }
        }
        if table.len() != 1 << block.len() {
            return Err(Error::InvalidDistribution(format!(
                "block table needs {} entries, got {}",
                1usize << block.len(),
                table.len()
            )));
        }
        if table.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidDistribution(
                "block table entries must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "block table sums to {total}, not 1"
            )));
        }
        let cumulative = table
            .iter()
            .scan(0.0, |acc, &v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            p,
            block: Some(Block {
                coords: block,
                table,
                cumulative,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Marginal `Pr(x_j = 1)`.
    pub fn p_one(&self, coord: usize) -> f64 {
        if let Some(block) = &self.block {
            if let Some(k) = block.coords.iter().position(|&c| c == coord) {
                return block
                    .table
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| (idx >> k) & 1 == 1)
                    .map(|(_, &v)| v)
                    .sum();
            }
        }
        self.p[coord]
    }

    /// Product parameters as given (block coordinates included verbatim).
    pub fn product_params(&self) -> &[f64] {
        &self.p
    }

    pub fn block(&self) -> Option<&Block> {
        self.block.as_ref()
    }

    pub fn block_coords(&self) -> &[usize] {
        self.block.as_ref().map_or(&[], |b| &b.coords)
    }

    pub fn in_block(&self, coord: usize) -> bool {
        self.block_coords().contains(&coord)
    }

    /// Draws one point into `words` (which must be zeroed and sized for `d`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, words: &mut [u64]) {
        match &self.block {
            None => {
                for (c, &p) in self.p.iter().enumerate() {
                    if rng.random::<f64>() < p {
                        set_bit(words, c, true);
                    }
                }
            }
            Some(block) => {
                let idx = block.sample_index(rng);
                for (k, &c) in block.coords.iter().enumerate() {
                    set_bit(words, c, (idx >> k) & 1 == 1);
                }
                for (c, &p) in self.p.iter().enumerate() {
                    if !block.coords.contains(&c) && rng.random::<f64>() < p {
                        set_bit(words, c, true);
                    }
                }
            }
        }
    }

    /// Exact `Pr(x_Q = w)` for distinct 0-based coordinates `coords`.
    pub fn marginal_probability(&self, coords: &[usize], bits: &[bool]) -> Result<f64> {
        if coords.len() != bits.len() {
            return Err(Error::DimensionMismatch {
                expected: coords.len(),
                actual: bits.len(),
            });
        }
        let d = self.dim();
        let mut seen = vec![false; d];
        for &c in coords {
            if c >= d {
                return Err(Error::InvalidPartition(format!(
                    "coordinate {} outside dimension {d}",
                    c + 1
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidPartition(format!(
                    "coordinate {} repeated",
                    c + 1
                )));
            }
        }
        let block = self.block_coords();
        let union = block.len() + coords.iter().filter(|c| !block.contains(c)).count();
        if union > MARGINAL_CAP {
            return Err(Error::CapExceeded {
                what: "marginal probability",
                needed: union,
                cap: MARGINAL_CAP,
            });
        }
        let mut prob = 1.0;
        let mut block_mask = 0usize;
        let mut block_value = 0usize;
        for (&c, &b) in coords.iter().zip(bits) {
            match block.iter().position(|&k| k == c) {
                Some(k) => {
                    block_mask |= 1 << k;
                    block_value |= usize::from(b) << k;
                }
                None => prob *= if b { self.p[c] } else { 1.0 - self.p[c] },
            }
        }
        if let Some(block) = &self.block {
            if block_mask != 0 {
                prob *= block
                    .table
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| idx & block_mask == block_value)
                    .map(|(_, &v)| v)
                    .sum::<f64>();
            }
        }
        Ok(prob)
    }
}

fn check_probs(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution(
            "dimension must be positive".into(),
        ));
    }
    for (j, &v) in p.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidDistribution(format!(
                "p_{} = {v} outside [0, 1]",
                j + 1
            )));
        }
    }
    Ok(())
}

/// JSON form. Coordinates are 1-based; `p` may be a scalar shared by all
/// coordinates.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DistributionRepr {
    Product {
        d: usize,
        p: ProbParam,
    },
    BlockCorrelated {
        d: usize,
        p: ProbParam,
        block: Vec<usize>,
        table: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProbParam {
    Scalar(f64),
    List(Vec<f64>),
}

impl ProbParam {
    fn expand(self, d: usize) -> Result<Vec<f64>> {
        match self {
            ProbParam::Scalar(v) => Ok(vec![v; d]),
            ProbParam::List(v) if v.len() == d => Ok(v),
            ProbParam::List(v) => Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            }),
        }
    }

    fn compress(p: Vec<f64>) -> Self {
        if p.windows(2).all(|w| w[0] == w[1]) {
            ProbParam::Scalar(p[0])
        } else {
            ProbParam::List(p)
        }
    }
}

impl TryFrom<DistributionRepr> for FeatureDistribution {
    type Error = Error;

    fn try_from(repr: DistributionRepr) -> Result<Self> {
        match repr {
            DistributionRepr::Product { d, p } => Self::product(p.expand(d)?),
            DistributionRepr::BlockCorrelated { d, p, block, table } => {
                let block = block
                    .into_iter()
                    .map(|c| {
                        c.checked_sub(1).ok_or_else(|| {
                            Error::InvalidDistribution("coordinates are 1-based".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::block_correlated(p.expand(d)?, block, table)
            }
        }
    }
}

impl From<FeatureDistribution> for DistributionRepr {
    fn from(dist: FeatureDistribution) -> Self {
        let d = dist.p.len();
        let p = ProbParam::compress(dist.p);
        match dist.block {
            None => DistributionRepr::Product { d, p },
            Some(block) => DistributionRepr::BlockCorrelated {
                d,
                p,
                block: block.coords.iter().map(|c| c + 1).collect(),
                table: block.table,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedSpec;

    fn correlated_pair(d: usize) -> FeatureDistribution {
        FeatureDistribution::block_correlated(vec![0.5; d], vec![0, 1], vec![0.5, 0.0, 0.0, 0.5])
            .unwrap()
    }

    #[test]
    fn product_marginals() {
        let dist = FeatureDistribution::uniform(3);
        assert_eq!(
            dist.marginal_probability(&[0, 1], &[false, true]).unwrap(),
            0.25
        );
        let dist = FeatureDistribution::product(vec![0.3, 0.6]).unwrap();
        let p = dist.marginal_probability(&[0, 1], &[true, true]).unwrap();
        assert!((p - 0.18).abs() < 1e-15);
    }

    #[test]
    fn block_marginals_read_the_table() {
        let dist = correlated_pair(3);
        assert_eq!(
            dist.marginal_probability(&[0, 1], &[false, true]).unwrap(),
            0.0
        );
        assert_eq!(
            dist.marginal_probability(&[0, 1], &[true, true]).unwrap(),
            0.5
        );
        assert_eq!(dist.marginal_probability(&[1], &[true]).unwrap(), 0.5);
        assert_eq!(dist.p_one(0), 0.5);
    }

    #[test]
    fn marginals_sum_to_one() {
        let dist = FeatureDistribution::block_correlated(
            vec![0.2, 0.7, 0.4, 0.9, 0.1, 0.55],
            vec![4, 1],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let coords = [0, 1, 2, 3, 4, 5];
        let total: f64 = (0..64u32)
            .map(|w| {
                let bits: Vec<bool> = (0..6).map(|k| (w >> k) & 1 == 1).collect();
                dist.marginal_probability(&coords, &bits).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(
            FeatureDistribution::block_correlated(vec![0.5; 2], vec![0, 1], vec![0.5; 4]).is_err()
        );
        assert!(
            FeatureDistribution::block_correlated(vec![0.5; 2], vec![0, 0], vec![0.25; 4]).is_err()
        );
        assert!(
            FeatureDistribution::block_correlated(vec![0.5; 2], vec![0, 2], vec![0.25; 4]).is_err()
        );
        assert!(FeatureDistribution::product(vec![1.5]).is_err());
    }

    #[test]
    fn sampled_block_respects_zero_cells() {
        let dist = correlated_pair(4);
        let mut rng = SeedSpec::new(1).rng("t", 0);
        for _ in 0..1000 {
            let mut w = [0u64];
            dist.sample_into(&mut rng, &mut w);
            assert_eq!(w[0] & 1, (w[0] >> 1) & 1);
        }
    }

    #[test]
    fn json_uses_one_based_coordinates() {
        let dist = correlated_pair(3);
        let json = serde_json::to_string(&dist).unwrap();
        assert!(json.contains("\"block\":[1,2]"), "{json}");
        let back: FeatureDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dist);
        let scalar: FeatureDistribution =
            serde_json::from_str(r#"{"kind":"product","d":4,"p":0.25}"#).unwrap();
        assert_eq!(scalar.product_params(), &[0.25; 4]);
        assert!(serde_json::from_str::<FeatureDistribution>(
            r#"{"kind":"product","d":4,"p":0.25,"extra":1}"#
        )
        .is_err());
    }
}
