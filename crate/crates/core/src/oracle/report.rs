use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    density_lower_bound, diminishing_returns_constant, relevant_set, strong_sparsity_margin,
    submodularity_constant, PopulationProblem, SparsityVariant, SplitSet,
};
use crate::Result;

/// Computed assumption constants for one problem.
///
/// Infinite constants serialize as the string `"infinity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(rename = "C_submodular", with = "extended")]
    pub c_submodular: f64,
    #[serde(rename = "C_diminishing", with = "extended")]
    pub c_diminishing: f64,
    #[serde(with = "extended")]
    pub beta_split: f64,
    #[serde(with = "extended")]
    pub beta_partition: f64,
    pub zeta: f64,
    /// Coordinates (1-based) with positive gain from the root.
    pub relevant_set: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Runs every assumption search with the scopes used by the theory:
/// split sets up to size `2r`, cell-local sets up to size `r`, and `q = r`.
pub fn diagnose(problem: &PopulationProblem) -> Result<DiagnosticsReport> {
    let r = problem.target().relevant().len();
    let c_submodular = submodularity_constant(problem, 2 * r)?;
    let c_diminishing = diminishing_returns_constant(problem, r)?;
    let beta_split = strong_sparsity_margin(problem, SparsityVariant::SplitSet)?;
    let beta_partition = strong_sparsity_margin(problem, SparsityVariant::Partition)?;
    let zeta = density_lower_bound(problem, r)?;
    let relevant = relevant_set(problem, &SplitSet::empty(), 0.0)?;

    let mut warnings = Vec::new();
    if c_submodular.is_infinite() {
        warnings.push("approximate submodularity fails: no finite constant".to_string());
    }
    if c_diminishing.is_infinite() {
        warnings.push("approximate diminishing returns fails: no finite constant".to_string());
    }
    if beta_split <= 0.0 {
        warnings.push(format!("strong sparsity fails: margin {beta_split}"));
    }
    if beta_partition <= 0.0 {
        warnings.push(format!(
            "strong partition sparsity fails: margin {beta_partition}"
        ));
    }
    if zeta <= 0.0 {
        warnings.push(
            "marginal density lower bound fails: some relevant cell has zero mass".to_string(),
        );
    }
    Ok(DiagnosticsReport {
        c_submodular,
        c_diminishing,
        beta_split,
        beta_partition,
        zeta,
        relevant_set: relevant.iter().map(|c| c + 1).collect(),
        warnings,
    })
}

/// Finite floats as numbers, infinities as `"infinity"` / `"-infinity"`.
pub mod extended {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("infinity")
        } else if *v < 0.0 {
            s.serialize_str("-infinity")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "infinity" => Ok(f64::INFINITY),
                "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "unknown number {other:?}"
                ))),
            },
        }
    }
}
