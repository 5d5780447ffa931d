//! Assumption diagnostics for one problem.
//!
//! Rows: `quantity,value`, with infinite constants written as `inf`. The
//! summary is the full report, infinities as `"infinity"`.

use serde::Deserialize;

use cart_core::data::Model;
use cart_core::oracle::{diagnose, PopulationProblem};

use crate::config::impl_experiment;
use crate::error::Result;
use crate::output::{num, Output, Table};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: Model,
}

impl_experiment!(DiagnoseConfig);

pub fn run(config: &DiagnoseConfig) -> Result<Output> {
    let problem = PopulationProblem::from_model(&config.problem)?;
    let report = diagnose(&problem)?;
    let mut table = Table::new(&["quantity", "value"])?;
    for (name, v) in [
        ("C_submodular", report.c_submodular),
        ("C_diminishing", report.c_diminishing),
        ("beta_split", report.beta_split),
        ("beta_partition", report.beta_partition),
        ("zeta", report.zeta),
    ] {
        table.push([name.to_string(), num(v)])?;
    }
    let mut summary = serde_json::to_value(&report)?;
    summary["experiment"] = "diagnose".into();
    Ok(Output {
        rows: table.finish()?,
        summary,
    })
}
