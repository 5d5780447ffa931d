//! Population `V̄(S)` and `L̄(S)` for every split set up to a size cap.
//!
//! Rows: `split_set,size,vbar,lbar`, split sets written as space-separated
//! 1-based coordinates in increasing order, subsets listed by size and then
//! lexicographically.

use serde::Deserialize;
use serde_json::json;

use cart_core::data::Model;
use cart_core::oracle::{PopulationProblem, SplitSet};

use crate::config::impl_experiment;
use crate::error::{ExperimentError, Result};
use crate::output::{num, Output, Table};

/// Largest split-set size the table enumerates.
pub const MAX_SIZE: usize = 4;
/// Largest number of rows the table emits.
pub const MAX_ROWS: usize = 1_000_000;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTableConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: Model,
    #[serde(default = "default_size")]
    pub max_size: usize,
}

impl_experiment!(OracleTableConfig);

fn default_size() -> usize {
    2
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn subsets(d: usize, k: usize, visit: &mut impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn go(
        d: usize,
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if cur.len() == k {
            return visit(cur);
        }
        for c in start..d {
            cur.push(c);
            go(d, k, c + 1, cur, visit)?;
            cur.pop();
        }
        Ok(())
    }
    go(d, k, 0, &mut Vec::with_capacity(k), visit)
}

pub fn run(config: &OracleTableConfig) -> Result<Output> {
    if config.max_size > MAX_SIZE {
        return Err(ExperimentError::Config(format!(
            "max_size {} above {MAX_SIZE}",
            config.max_size
        )));
    }
    let problem = PopulationProblem::from_model(&config.problem)?;
    let d = problem.dim();
    let k_max = config.max_size.min(d);
    let total: usize = (0..=k_max).map(|k| binomial(d, k)).sum();
    if total > MAX_ROWS {
        return Err(ExperimentError::Config(format!(
            "table would have {total} rows, above {MAX_ROWS}"
        )));
    }
    let mut table = Table::new(&["split_set", "size", "vbar", "lbar"])?;
    for k in 0..=k_max {
        subsets(d, k, &mut |s| {
            let splits = SplitSet::new(s.to_vec())?;
            let label: Vec<String> = s.iter().map(|c| (c + 1).to_string()).collect();
            table.push([
                label.join(" "),
                k.to_string(),
                num(problem.vbar(&splits)?),
                num(problem.lbar(&splits)?),
            ])
        })?;
    }
    Ok(Output {
        rows: table.finish()?,
        summary: json!({
            "experiment": "oracle-table",
            "d": d,
            "max_size": k_max,
            "rows": total,
            "second_moment": problem.second_moment(),
        }),
    })
}
