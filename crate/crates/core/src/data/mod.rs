//! Generative model: feature laws, sparse targets, noise, and datasets.

mod dataset;
mod distribution;
mod noise;
mod target;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use dataset::Dataset;
pub use distribution::{Block, FeatureDistribution, MARGINAL_CAP, MAX_BLOCK};
pub use noise::NoiseModel;
pub use target::{SparseTarget, TargetSpec, MAX_RELEVANT};

use crate::bits::{words_for, BitMatrix};
use crate::seed::SeedSpec;
use crate::{Error, Result};

/// Distribution, target and noise bundled together; the JSON form used by
/// configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct Model {
    pub distribution: FeatureDistribution,
    pub target: SparseTarget,
    pub noise: NoiseModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    distribution: FeatureDistribution,
    target: TargetSpec,
    #[serde(default = "no_noise")]
    noise: NoiseModel,
}

fn no_noise() -> NoiseModel {
    NoiseModel::None
}

impl TryFrom<ModelRepr> for Model {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let target = r.target.build(r.distribution.dim())?;
        Ok(Model {
            distribution: r.distribution,
            target,
            noise: r.noise,
        })
    }
}

impl From<Model> for ModelRepr {
    fn from(m: Model) -> Self {
        ModelRepr {
            target: TargetSpec::from(&m.target),
            distribution: m.distribution,
            noise: m.noise,
        }
    }
}

impl Model {
    pub fn new(
        distribution: FeatureDistribution,
        target: SparseTarget,
        noise: NoiseModel,
    ) -> Result<Self> {
        if distribution.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: distribution.dim(),
                actual: target.dim(),
            });
        }
        Ok(Self {
            distribution,
            target,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.distribution.dim()
    }

    pub fn sample(&self, n: usize, seed: SeedSpec) -> Result<Dataset> {
        sample_dataset(&self.distribution, &self.target, &self.noise, n, seed)
    }
}

/// Draws `n` i.i.d. rows: `x` from `dist`, `y = m(x) + ε`.
pub fn sample_dataset(
    dist: &FeatureDistribution,
    target: &SparseTarget,
    noise: &NoiseModel,
    n: usize,
    seed: SeedSpec,
) -> Result<Dataset> {
    if dist.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: target.dim(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = dist.dim();
    let mut rng = seed.rng("dataset", 0);
    let mut x = BitMatrix::with_capacity(d, n);
    let mut y = Vec::with_capacity(n);
    let mut words = vec![0u64; words_for(d)];
    for _ in 0..n {
        words.iter_mut().for_each(|w| *w = 0);
        dist.sample_into(&mut rng, &mut words);
        y.push(target.eval_words(&words) + noise.sample(&mut rng));
        x.push_words(&words);
    }
    Dataset::new(x, y)
}

/// Uniformly random split of `0..n` into a structure part of size `⌈n/2⌉`
/// and an estimation part of size `⌊n/2⌋`, each sorted ascending.
pub fn honest_split_indices(n: usize, seed: SeedSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            actual: n,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng("honest-split", 0));
    let mut estimation = perm.split_off(n.div_ceil(2));
    perm.sort_unstable();
    estimation.sort_unstable();
    Ok((perm, estimation))
}

/// Splits `data` into (structure half, estimation half).
pub fn split_honest_halves(data: &Dataset, seed: SeedSpec) -> Result<(Dataset, Dataset)> {
    let (s, e) = honest_split_indices(data.len(), seed)?;
    Ok((data.select(&s), data.select(&e)))
}
