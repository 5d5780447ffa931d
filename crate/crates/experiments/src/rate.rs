//! Exact population MSE of fitted trees or subsampled forests across a grid
//! of sample sizes.
//!
//! Rows: `n,replicate,mse`. The summary reports the per-`n` mean and an OLS
//! slope of `log₂(mean MSE)` against `log₂ n`.

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use cart_core::data::Model;
use cart_core::forest::{fit_forest, ForestConfig};
use cart_core::oracle::PopulationProblem;
use cart_core::seed::SeedSpec;
use cart_core::tree::{build, BuildConfig};

use crate::config::{impl_experiment, ForestTreeSpec, TreeSpec};
use crate::error::{ExperimentError, Result};
use crate::output::{json_num, num, Output, Table};
use crate::stats::{mean, ols};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: Model,
    /// Exactly one of `tree` and `forest` is given.
    #[serde(default)]
    pub tree: Option<TreeSpec>,
    #[serde(default)]
    pub forest: Option<RateForestSpec>,
    pub n: Vec<usize>,
    pub replicates: usize,
}

/// Forest settings; the tree count is either fixed or `n / samples_per_tree`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateForestSpec {
    pub subsample: usize,
    #[serde(default)]
    pub trees: Option<usize>,
    #[serde(default)]
    pub samples_per_tree: Option<usize>,
    #[serde(default)]
    pub tree: ForestTreeSpec,
}

impl RateForestSpec {
    fn trees_for(&self, n: usize) -> Result<usize> {
        match (self.trees, self.samples_per_tree) {
            (Some(b), None) => Ok(b),
            (None, Some(k)) if k > 0 => Ok((n / k).max(2)),
            _ => Err(ExperimentError::Config(
                "forest needs exactly one of trees and a positive samples_per_tree".into(),
            )),
        }
    }
}

enum Estimator {
    Tree(TreeSpec),
    Forest(RateForestSpec),
}

impl RateConfig {
    fn estimator(&self) -> Result<Estimator> {
        match (self.tree, self.forest) {
            (Some(t), None) => Ok(Estimator::Tree(t)),
            (None, Some(f)) => Ok(Estimator::Forest(f)),
            _ => Err(ExperimentError::Config(
                "rate config needs exactly one of tree and forest".into(),
            )),
        }
    }
}

impl_experiment!(RateConfig);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub replicate: usize,
    pub mse: f64,
}

fn stream(grid: usize, replicate: usize) -> u64 {
    ((grid as u64) << 32) | replicate as u64
}

pub fn simulate(config: &RateConfig, seed: SeedSpec) -> Result<Vec<RateRow>> {
    if config.n.is_empty() {
        return Err(ExperimentError::Config("sample size grid is empty".into()));
    }
    if config.replicates == 0 {
        return Err(ExperimentError::Config(
            "replicates must be at least 1".into(),
        ));
    }
    let estimator = config.estimator()?;
    if let Estimator::Forest(f) = &estimator {
        for &n in &config.n {
            f.trees_for(n)?;
        }
    }
    let problem = PopulationProblem::from_model(&config.problem)?;
    let mut rows = Vec::with_capacity(config.n.len() * config.replicates);
    for (g, &n) in config.n.iter().enumerate() {
        let mses: Vec<f64> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let k = stream(g, rep);
                let data = config.problem.sample(n, seed.derive("rate-data", k))?;
                match &estimator {
                    Estimator::Tree(t) => {
                        let tree_config =
                            BuildConfig::new(t.budget, t.honest, seed.derive("rate-tree", k));
                        let tree = build(t.variant, &data, &tree_config)?;
                        Ok(tree.population_mse(&problem)?)
                    }
                    Estimator::Forest(f) => {
                        let forest_config = ForestConfig::new(
                            f.subsample,
                            f.trees_for(n)?,
                            seed.derive("rate-forest", k),
                        )
                        .with_variant(f.tree.variant)
                        .with_budget(f.tree.budget)
                        .with_honest(f.tree.honest);
                        let forest = fit_forest(&data, &forest_config)?;
                        Ok(forest.population_mse(&problem)?)
                    }
                }
            })
            .collect::<Result<_>>()?;
        rows.extend(
            mses.into_iter()
                .enumerate()
                .map(|(replicate, mse)| RateRow { n, replicate, mse }),
        );
    }
    Ok(rows)
}

/// Aggregates rows in order: per-`n` means and the log-log slope, which is
/// `null` when any mean MSE is not positive.
pub fn summarize(rows: &[RateRow]) -> Value {
    let mut grid: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in rows {
        match grid.iter_mut().find(|(n, _)| *n == r.n) {
            Some((_, v)) => v.push(r.mse),
            None => grid.push((r.n, vec![r.mse])),
        }
    }
    let points: Vec<Value> = grid
        .iter()
        .map(|(n, v)| json!({ "n": n, "replicates": v.len(), "mean_mse": json_num(mean(v)) }))
        .collect();
    let means: Vec<f64> = grid.iter().map(|(_, v)| mean(v)).collect();
    let fit = if means.iter().all(|&m| m > 0.0) {
        let x: Vec<f64> = grid.iter().map(|(n, _)| (*n as f64).log2()).collect();
        let y: Vec<f64> = means.iter().map(|m| m.log2()).collect();
        ols(&x, &y)
    } else {
        None
    };
    json!({
        "points": points,
        "slope": fit.map(|f| json_num(f.slope)),
        "slope_se": fit.and_then(|f| f.slope_se).map(json_num),
        "intercept": fit.map(|f| json_num(f.intercept)),
    })
}

pub fn run(config: &RateConfig, seed: SeedSpec) -> Result<Output> {
    let rows = simulate(config, seed)?;
    let mut table = Table::new(&["n", "replicate", "mse"])?;
    for r in &rows {
        table.push([r.n.to_string(), r.replicate.to_string(), num(r.mse)])?;
    }
    let mut summary = summarize(&rows);
    summary["experiment"] = json!("rate");
    summary["seed"] = json!(seed.master());
    Ok(Output {
        rows: table.finish()?,
        summary,
    })
}
