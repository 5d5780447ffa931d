//! Normal-interval coverage of honest forests at fixed query points.
//!
//! Rows: `replicate,x_id,pred,ij_var,lo,hi,covered`. Query points are fixed
//! before any training data is drawn. Rows whose variance estimate is zero
//! have undefined standardized residuals; they count toward coverage but are
//! left out of the residual moments.

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use cart_core::bits::{set_bit, words_for};
use cart_core::data::Model;
use cart_core::forest::{fit_forest, normal_quantile_two_sided, ForestConfig, VarianceEstimator};
use cart_core::seed::SeedSpec;

use crate::config::{impl_experiment, ForestTreeSpec, Queries, SRule};
use crate::error::{ExperimentError, Result};
use crate::output::{json_num, num, Output, Table};
use crate::stats::moments;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: Model,
    pub n: usize,
    pub s: SRule,
    #[serde(default = "default_trees")]
    pub trees: usize,
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub queries: Queries,
    #[serde(default)]
    pub tree: ForestTreeSpec,
    #[serde(default = "default_variance")]
    pub variance: VarianceEstimator,
}

impl_experiment!(CoverageConfig);

fn default_trees() -> usize {
    2000
}

fn default_level() -> f64 {
    0.95
}

fn default_variance() -> VarianceEstimator {
    VarianceEstimator::IjCorrected
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageRow {
    pub replicate: usize,
    pub x_id: usize,
    pub pred: f64,
    pub ij_var: f64,
    pub lo: f64,
    pub hi: f64,
    pub covered: bool,
}

/// A query point with its true regression value.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub bits: Vec<u8>,
    pub words: Vec<u64>,
    pub truth: f64,
}

pub fn query_points(config: &CoverageConfig, seed: SeedSpec) -> Result<Vec<Query>> {
    let d = config.problem.dim();
    let target = &config.problem.target;
    let from_words = |words: Vec<u64>| {
        let bits = (0..d)
            .map(|c| u8::from(cart_core::bits::get_bit(&words, c)))
            .collect();
        let truth = target.eval_words(&words);
        Query { bits, words, truth }
    };
    match &config.queries {
        Queries::Count(0) => Err(ExperimentError::Config(
            "need at least one query point".into(),
        )),
        Queries::Count(k) => {
            let mut rng = seed.rng("queries", 0);
            Ok((0..*k)
                .map(|_| {
                    let mut words = vec![0u64; words_for(d)];
                    config
                        .problem
                        .distribution
                        .sample_into(&mut rng, &mut words);
                    from_words(words)
                })
                .collect())
        }
        Queries::Points(points) => points
            .iter()
            .map(|p| {
                if p.len() != d || p.iter().any(|&b| b > 1) {
                    return Err(ExperimentError::Config(format!(
                        "query point must be {d} entries of 0/1"
                    )));
                }
                let mut words = vec![0u64; words_for(d)];
                for (c, &b) in p.iter().enumerate() {
                    set_bit(&mut words, c, b == 1);
                }
                Ok(from_words(words))
            })
            .collect(),
    }
}

pub struct CoverageRun {
    pub s: usize,
    pub queries: Vec<Query>,
    pub rows: Vec<CoverageRow>,
    pub warnings: Vec<String>,
}

pub fn simulate(config: &CoverageConfig, seed: SeedSpec) -> Result<CoverageRun> {
    if config.replicates == 0 {
        return Err(ExperimentError::Config(
            "replicates must be at least 1".into(),
        ));
    }
    if config.trees < 2 {
        return Err(ExperimentError::Config(
            "variance estimation needs at least two trees".into(),
        ));
    }
    let z = normal_quantile_two_sided(config.level)?;
    let mut warnings = Vec::new();
    let s = config.s.resolve(config.n, &mut warnings)?;
    let queries = query_points(config, seed)?;
    let forest_config = |rep: usize| ForestConfig {
        subsample: s,
        trees: config.trees,
        variant: config.tree.variant,
        budget: config.tree.budget,
        honest: config.tree.honest,
        seed: seed.derive("coverage-forest", rep as u64),
    };
    forest_config(0).validate(config.n)?;
    let per_rep: Vec<Vec<CoverageRow>> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| {
            let data = config
                .problem
                .sample(config.n, seed.derive("coverage-data", rep as u64))?;
            let forest = fit_forest(&data, &forest_config(rep))?;
            queries
                .iter()
                .enumerate()
                .map(|(x_id, q)| {
                    let pred = forest.predict(&q.words);
                    let ij_var = forest.variance(&q.words, config.variance)?;
                    let half = z * ij_var.sqrt();
                    let (lo, hi) = (pred - half, pred + half);
                    Ok(CoverageRow {
                        replicate: rep,
                        x_id,
                        pred,
                        ij_var,
                        lo,
                        hi,
                        covered: lo <= q.truth && q.truth <= hi,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(CoverageRun {
        s,
        queries,
        rows: per_rep.into_iter().flatten().collect(),
        warnings,
    })
}

/// Coverage overall and per query, plus moments of
/// `(pred − m(x)) / √ij_var` over rows with positive variance.
pub fn summarize(rows: &[CoverageRow], truths: &[f64]) -> Value {
    let covered = rows.iter().filter(|r| r.covered).count();
    let per_query: Vec<Value> = truths
        .iter()
        .enumerate()
        .map(|(x_id, _)| {
            let mine: Vec<&CoverageRow> = rows.iter().filter(|r| r.x_id == x_id).collect();
            let hit = mine.iter().filter(|r| r.covered).count();
            json!({ "x_id": x_id, "coverage": json_num(hit as f64 / mine.len() as f64) })
        })
        .collect();
    let residuals: Vec<f64> = rows
        .iter()
        .filter(|r| r.ij_var > 0.0)
        .map(|r| (r.pred - truths[r.x_id]) / r.ij_var.sqrt())
        .collect();
    let m = moments(&residuals);
    json!({
        "coverage": json_num(covered as f64 / rows.len() as f64),
        "rows": rows.len(),
        "per_query": per_query,
        "degenerate_rows": rows.len() - residuals.len(),
        "residual_mean": m.map(|m| json_num(m.mean)),
        "residual_variance": m.map(|m| json_num(m.variance)),
        "residual_skewness": m.map(|m| json_num(m.skewness)),
        "residual_excess_kurtosis": m.map(|m| json_num(m.excess_kurtosis)),
    })
}

pub fn run(config: &CoverageConfig, seed: SeedSpec) -> Result<Output> {
    let result = simulate(config, seed)?;
    let mut table = Table::new(&["replicate", "x_id", "pred", "ij_var", "lo", "hi", "covered"])?;
    for r in &result.rows {
        table.push([
            r.replicate.to_string(),
            r.x_id.to_string(),
            num(r.pred),
            num(r.ij_var),
            num(r.lo),
            num(r.hi),
            u8::from(r.covered).to_string(),
        ])?;
    }
    let truths: Vec<f64> = result.queries.iter().map(|q| q.truth).collect();
    let mut summary = summarize(&result.rows, &truths);
    summary["experiment"] = json!("coverage");
    summary["seed"] = json!(seed.master());
    summary["n"] = json!(config.n);
    summary["s"] = json!(result.s);
    summary["trees"] = json!(config.trees);
    summary["level"] = json_num(config.level);
    summary["variance"] = serde_json::to_value(config.variance)?;
    summary["queries"] = result
        .queries
        .iter()
        .enumerate()
        .map(|(x_id, q)| json!({ "x_id": x_id, "x": q.bits, "truth": json_num(q.truth) }))
        .collect();
    summary["warnings"] = json!(result.warnings);
    Ok(Output {
        rows: table.finish()?,
        summary,
    })
}
