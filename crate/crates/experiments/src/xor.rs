//! First level at which the population level-split search picks a relevant
//! coordinate of a two-coordinate xor target on uniform features.
//!
//! Every coordinate has zero gain until a relevant one is split, so the pick
//! is uniform among the unused coordinates and the probability of missing
//! both relevant coordinates for the first `h` levels is
//! `Π_{ℓ<h} (1 − 2/(d − ℓ))`.
//!
//! Rows: `d,replicate,first_hit_level` (levels counted from 1).

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use cart_core::data::{FeatureDistribution, SparseTarget};
use cart_core::oracle::{LevelSplitSearch, PopulationProblem};
use cart_core::seed::SeedSpec;

use crate::config::impl_experiment;
use crate::error::{ExperimentError, Result};
use crate::output::{json_num, Output, Table};

const XOR_TABLE: [f64; 4] = [-0.25, 0.25, 0.25, -0.25];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub d: Vec<usize>,
    pub replicates: usize,
    /// Target values on `(x_1, x_2)`, indexed by `x_1 + 2·x_2`.
    #[serde(default)]
    pub table: Option<Vec<f64>>,
}

impl_experiment!(XorConfig);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XorRow {
    pub d: usize,
    pub replicate: usize,
    pub first_hit_level: usize,
}

/// `⌊√d⌋`, the depth horizon of the lower bound.
pub fn horizon(d: usize) -> usize {
    let mut h = (d as f64).sqrt() as usize;
    while (h + 1) * (h + 1) <= d {
        h += 1;
    }
    while h * h > d {
        h -= 1;
    }
    h
}

/// `Π_{ℓ=0}^{h−1} (1 − 2/(d − ℓ))`.
pub fn exact_miss_probability(d: usize, h: usize) -> f64 {
    (0..h).fold(1.0, |p, l| p * (1.0 - 2.0 / (d - l) as f64))
}

pub fn simulate(config: &XorConfig, seed: SeedSpec) -> Result<Vec<XorRow>> {
    if config.d.is_empty() {
        return Err(ExperimentError::Config("dimension grid is empty".into()));
    }
    if config.replicates == 0 {
        return Err(ExperimentError::Config(
            "replicates must be at least 1".into(),
        ));
    }
    let table = config.table.clone().unwrap_or_else(|| XOR_TABLE.to_vec());
    let mut rows = Vec::new();
    for (g, &d) in config.d.iter().enumerate() {
        if d < 2 {
            return Err(ExperimentError::Config(format!("dimension {d} below 2")));
        }
        let problem = PopulationProblem::new(
            FeatureDistribution::uniform(d),
            SparseTarget::new(d, vec![0, 1], table.clone())?,
        )?;
        let hits: Vec<usize> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let key = ((g as u64) << 32) | rep as u64;
                let mut search = LevelSplitSearch::new(&problem, seed.derive("xor", key));
                let mut level = 0;
                while let Some(c) = search.step()? {
                    level += 1;
                    if c < 2 {
                        return Ok(level);
                    }
                }
                Err(ExperimentError::Config(format!(
                    "no relevant coordinate chosen in dimension {d}"
                )))
            })
            .collect::<Result<_>>()?;
        rows.extend(
            hits.into_iter()
                .enumerate()
                .map(|(replicate, first_hit_level)| XorRow {
                    d,
                    replicate,
                    first_hit_level,
                }),
        );
    }
    Ok(rows)
}

pub fn summarize(rows: &[XorRow]) -> Value {
    let mut dims: Vec<usize> = Vec::new();
    for r in rows {
        if !dims.contains(&r.d) {
            dims.push(r.d);
        }
    }
    let per_d: Vec<Value> = dims
        .iter()
        .map(|&d| {
            let levels: Vec<usize> = rows
                .iter()
                .filter(|r| r.d == d)
                .map(|r| r.first_hit_level)
                .collect();
            let h = horizon(d);
            let m = levels.len() as f64;
            let missed = levels.iter().filter(|&&l| l > h).count();
            json!({
                "d": d,
                "replicates": levels.len(),
                "mean_first_hit_level": json_num(levels.iter().sum::<usize>() as f64 / m),
                "horizon": h,
                "miss_probability": json_num(missed as f64 / m),
                "miss_probability_exact": json_num(exact_miss_probability(d, h)),
                "lower_bound": json_num(1.0 - 4.0 / (d as f64).sqrt()),
            })
        })
        .collect();
    json!({ "dimensions": per_d })
}

pub fn run(config: &XorConfig, seed: SeedSpec) -> Result<Output> {
    let rows = simulate(config, seed)?;
    let mut table = Table::new(&["d", "replicate", "first_hit_level"])?;
    for r in &rows {
        table.push([
            r.d.to_string(),
            r.replicate.to_string(),
            r.first_hit_level.to_string(),
        ])?;
    }
    let mut summary = summarize(&rows);
    summary["experiment"] = json!("xor");
    summary["seed"] = json!(seed.master());
    Ok(Output {
        rows: table.finish()?,
        summary,
    })
}
