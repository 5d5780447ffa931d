//! Subsampled honest forests with infinitesimal-jackknife variance estimates.
//!
//! Tree `b` draws its own subsample of size `s` without replacement from the
//! stream `("tree", b)`. The draw comes back in random order, which doubles as
//! the per-tree permutation of the samples before the tree is built. Because
//! every stream depends only on the master seed and the tree index, fitted
//! forests do not depend on the thread count.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{sample_dataset, Dataset, NoiseModel};
use crate::oracle::PopulationProblem;
use crate::seed::SeedSpec;
use crate::tree::{build, Budget, BuildConfig, Tree, TreeNode, Variant};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    /// Subsample size `s`.
    pub subsample: usize,
    /// Number of trees `B`.
    pub trees: usize,
    pub variant: Variant,
    pub budget: Budget,
    pub honest: bool,
    pub seed: SeedSpec,
}

impl ForestConfig {
    /// Honest, fully grown level-split trees.
    pub fn new(subsample: usize, trees: usize, seed: impl Into<SeedSpec>) -> Self {
        Self {
            subsample,
            trees,
            variant: Variant::LevelSplit,
            budget: Budget::FullyGrown,
            honest: true,
            seed: seed.into(),
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_honest(mut self, honest: bool) -> Self {
        self.honest = honest;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::InvalidConfig(
                "forest needs at least one tree".into(),
            ));
        }
        let min = if self.honest { 2 } else { 1 };
        if self.subsample < min {
            return Err(Error::InvalidConfig(format!(
                "subsample size {} below {min}",
                self.subsample
            )));
        }
        if self.subsample > n {
            return Err(Error::InsufficientSamples {
                required: self.subsample,
                actual: n,
            });
        }
        Ok(())
    }

    fn tree_config(&self, b: usize) -> BuildConfig {
        BuildConfig::new(
            self.budget,
            self.honest,
            self.seed.derive("tree-build", b as u64),
        )
    }
}

/// Which jackknife variance backs a confidence interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceEstimator {
    #[default]
    Ij,
    IjCorrected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    config: ForestConfig,
    n: usize,
    trees: Vec<Tree>,
    /// Sorted sample indices in each tree's subsample.
    members: Vec<Vec<u32>>,
}

/// Fits `B` trees in parallel on the current rayon pool.
pub fn fit_forest(data: &Dataset, config: &ForestConfig) -> Result<Forest> {
    let n = data.len();
    config.validate(n)?;
    let fitted: Vec<(Tree, Vec<u32>)> = (0..config.trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = config.seed.rng("tree", b as u64);
            let order = sample(&mut rng, n, config.subsample).into_vec();
            let tree = build(config.variant, &data.select(&order), &config.tree_config(b))?;
            let mut members: Vec<u32> = order.iter().map(|&i| i as u32).collect();
            members.sort_unstable();
            Ok((tree, members))
        })
        .collect::<Result<_>>()?;
    let (trees, members) = fitted.into_iter().unzip();
    Ok(Forest {
        config: *config,
        n,
        trees,
        members,
    })
}

impl Forest {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Number of training samples the ledger refers to.
    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.trees[0].dim()
    }

    /// Sorted subsample of tree `b`.
    pub fn subsample(&self, b: usize) -> &[u32] {
        &self.members[b]
    }

    /// Membership indicator `N_{b,i}` as a dense `B × n` 0/1 matrix.
    pub fn ledger(&self) -> Vec<Vec<u8>> {
        self.members
            .iter()
            .map(|m| {
                let mut row = vec![0u8; self.n];
                for &i in m {
                    row[i as usize] = 1;
                }
                row
            })
            .collect()
    }

    pub fn tree_predictions(&self, words: &[u64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(words)).collect()
    }

    pub fn predict(&self, words: &[u64]) -> f64 {
        mean(&self.tree_predictions(words))
    }

    /// `V̂(x) = Σ_i Cov_b(N_{b,i}, T_b(x))²`, covariances taken with `1/B`.
    pub fn ij_variance(&self, words: &[u64]) -> Result<f64> {
        let b = self.trees.len();
        if b < 2 {
            return Err(Error::InvalidConfig(
                "jackknife variance needs at least two trees".into(),
            ));
        }
        let preds = self.tree_predictions(words);
        let center = mean(&preds);
        let mut acc = vec![0.0; self.n];
        for (members, t) in self.members.iter().zip(&preds) {
            let dev = t - center;
            for &i in members {
                acc[i as usize] += dev;
            }
        }
        let bf = b as f64;
        Ok(acc.iter().fold(0.0, |s, a| s + (a / bf) * (a / bf)))
    }

    /// Jackknife variance minus its finite-`B` Monte Carlo bias
    /// `s(1 − s/n)/B · Var_b(T_b)`, floored at zero.
    ///
    /// With `B` trees each `Cov_b(N_{b,i}, T_b)` carries sampling noise of
    /// variance about `Var(N_{b,i})·Var_b(T_b)/B`; summed over the `n`
    /// samples this inflates the raw estimate by roughly `s·Var_b(T_b)/B`,
    /// which dominates unless `B ≫ n`.
    pub fn ij_variance_corrected(&self, words: &[u64]) -> Result<f64> {
        let raw = self.ij_variance(words)?;
        let preds = self.tree_predictions(words);
        let center = mean(&preds);
        let b = preds.len() as f64;
        let spread = preds
            .iter()
            .fold(0.0, |s, t| s + (t - center) * (t - center))
            / b;
        let s = self.config.subsample as f64;
        let inclusion = s * (1.0 - s / self.n as f64);
        Ok((raw - inclusion * spread / b).max(0.0))
    }

    pub fn variance(&self, words: &[u64], estimator: VarianceEstimator) -> Result<f64> {
        match estimator {
            VarianceEstimator::Ij => self.ij_variance(words),
            VarianceEstimator::IjCorrected => self.ij_variance_corrected(words),
        }
    }

    /// Normal interval `pred ± z·√V̂` at the given two-sided level, using the
    /// raw jackknife variance.
    pub fn confidence_interval(&self, words: &[u64], level: f64) -> Result<(f64, f64)> {
        self.confidence_interval_with(words, level, VarianceEstimator::Ij)
    }

    pub fn confidence_interval_with(
        &self,
        words: &[u64],
        level: f64,
        estimator: VarianceEstimator,
    ) -> Result<(f64, f64)> {
        let z = normal_quantile_two_sided(level)?;
        let pred = self.predict(words);
        let half = z * self.variance(words, estimator)?.sqrt();
        Ok((pred - half, pred + half))
    }

    /// Exact `E_x[(m(x) − f(x))²]` of the forest average, enumerating the
    /// target's core together with every coordinate any tree splits on.
    pub fn population_mse(&self, problem: &PopulationProblem) -> Result<f64> {
        if problem.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                actual: self.dim(),
            });
        }
        let mut used = vec![false; self.dim()];
        for node in self.trees.iter().flat_map(|t| t.nodes()) {
            if let TreeNode::Internal { coord, .. } = *node {
                used[coord] = true;
            }
        }
        let used: Vec<usize> = (0..self.dim()).filter(|&c| used[c]).collect();
        let mut total = 0.0;
        problem.for_each_point(&used, |x, p, m| {
            let e = m - self.predict(x);
            total += p * e * e;
        })?;
        Ok(total)
    }

    /// Writes `manifest.json`, `tree_<b>.json` and `ledger.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            config: self.config,
            n: self.n,
            d: self.dim(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        for (b, tree) in self.trees.iter().enumerate() {
            fs::write(dir.join(tree_file(b)), tree.to_json()?)?;
        }
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(dir.join("ledger.csv"))?;
        for row in self.ledger() {
            w.write_record(row.iter().map(|v| if *v == 1 { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Forest> {
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let config = manifest.config;
        config.validate(manifest.n)?;
        let mut trees = Vec::with_capacity(config.trees);
        for b in 0..config.trees {
            let tree = Tree::from_json(&fs::read_to_string(dir.join(tree_file(b)))?)?;
            if tree.dim() != manifest.d {
                return Err(Error::DimensionMismatch {
                    expected: manifest.d,
                    actual: tree.dim(),
                });
            }
            trees.push(tree);
        }
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(dir.join("ledger.csv"))?;
        let mut members = Vec::with_capacity(config.trees);
        for record in r.records() {
            let record = record?;
            if record.len() != manifest.n {
                return Err(Error::InvalidDataset(format!(
                    "ledger row has {} entries, expected {}",
                    record.len(),
                    manifest.n
                )));
            }
            let mut row = Vec::with_capacity(config.subsample);
            for (i, v) in record.iter().enumerate() {
                match v {
                    "1" => row.push(i as u32),
                    "0" => {}
                    other => {
                        return Err(Error::InvalidDataset(format!(
                            "ledger entry {other:?} is not 0/1"
                        )))
                    }
                }
            }
            if row.len() != config.subsample {
                return Err(Error::InvalidDataset(format!(
                    "ledger row sums to {}, expected {}",
                    row.len(),
                    config.subsample
                )));
            }
            members.push(row);
        }
        if members.len() != config.trees {
            return Err(Error::InvalidDataset(format!(
                "ledger has {} rows, expected {}",
                members.len(),
                config.trees
            )));
        }
        Ok(Forest {
            config,
            n: manifest.n,
            trees,
            members,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    config: ForestConfig,
    n: usize,
    d: usize,
}

fn tree_file(b: usize) -> String {
    format!("tree_{b:05}.json")
}

fn mean(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |s, v| s + v) / values.len() as f64
}

/// `z_{(1+level)/2}` of the standard normal.
pub fn normal_quantile_two_sided(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf((1.0 + level) / 2.0))
}

/// Monte Carlo mean and standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Estimate {
        let k = values.len() as f64;
        let m = mean(values);
        let var = if values.len() > 1 {
            values.iter().fold(0.0, |s, v| s + (v - m) * (v - m)) / (k - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean: m,
            std_error: (var / k).sqrt(),
        }
    }
}

/// Monte Carlo estimate of `E[Σ_A Pr(A) Δ_m(A)]` for one tree fitted on a
/// fresh size-`s` dataset, each replicate drawn from stream `("diameter", k)`.
pub fn expected_partition_diameter(
    problem: &PopulationProblem,
    noise: &NoiseModel,
    s: usize,
    reps: usize,
    variant: Variant,
    tree: BuildConfig,
) -> Result<Estimate> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let seed = tree.seed.derive("diameter", k as u64);
            let data = sample_dataset(problem.distribution(), problem.target(), noise, s, seed)?;
            let config = BuildConfig {
                seed: seed.derive("tree-build", 0),
                ..tree
            };
            let fitted = build(variant, &data, &config)?;
            problem.expected_value_diameter(&fitted.partition())
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&values))
}
