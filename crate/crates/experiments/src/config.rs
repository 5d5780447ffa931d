//! Pieces shared by the experiment configurations.

use serde::Deserialize;

use cart_core::tree::{Budget, Variant};

use crate::error::{ExperimentError, Result};

/// Tree family, size budget and honesty for the fitted trees.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub variant: Variant,
    pub budget: Budget,
    #[serde(default)]
    pub honest: bool,
}

/// Forest trees default to honest, fully grown level-split trees.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestTreeSpec {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_budget")]
    pub budget: Budget,
    #[serde(default = "default_true")]
    pub honest: bool,
}

impl Default for ForestTreeSpec {
    fn default() -> Self {
        Self {
            variant: default_variant(),
            budget: default_budget(),
            honest: true,
        }
    }
}

fn default_variant() -> Variant {
    Variant::LevelSplit
}

fn default_budget() -> Budget {
    Budget::FullyGrown
}

fn default_true() -> bool {
    true
}

/// Subsample size as a function of `n`: `fixed:k` or `pow:a` (`s = ⌈n^a⌉`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SRule {
    Fixed(usize),
    Pow(f64),
}

impl SRule {
    pub fn parse(tag: &str) -> Result<SRule> {
        let bad = || ExperimentError::Config(format!("invalid subsample rule {tag:?}"));
        let (kind, arg) = tag.split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => Ok(SRule::Fixed(arg.parse().map_err(|_| bad())?)),
            "pow" => {
                let a: f64 = arg.parse().map_err(|_| bad())?;
                if !(a > 0.0 && a < 0.5) {
                    return Err(ExperimentError::Config(format!(
                        "subsample exponent {a} must lie in (0, 1/2)"
                    )));
                }
                Ok(SRule::Pow(a))
            }
            _ => Err(bad()),
        }
    }

    /// Resolves `s` for `n` samples. Subsamples above `√n` are rejected;
    /// exactly `√n` is allowed with a warning.
    pub fn resolve(&self, n: usize, warnings: &mut Vec<String>) -> Result<usize> {
        let s = match *self {
            SRule::Fixed(k) => k,
            SRule::Pow(a) => {
                // powf can land just above an exact integer power (1024^0.4).
                let v = (n as f64).powf(a);
                (v * (1.0 - 1e-12)).ceil() as usize
            }
        };
        let sq = s.saturating_mul(s);
        if sq > n {
            return Err(ExperimentError::Config(format!(
                "subsample size {s} exceeds sqrt(n) for n = {n}; normality needs s = o(sqrt(n))"
            )));
        }
        if sq == n {
            warnings.push(format!(
                "subsample size {s} equals sqrt(n); normality needs s = o(sqrt(n))"
            ));
        }
        Ok(s)
    }
}

impl<'de> Deserialize<'de> for SRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        SRule::parse(&tag).map_err(serde::de::Error::custom)
    }
}

/// Query points: a count drawn from the feature law, or explicit 0/1 vectors.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Queries {
    Count(usize),
    Points(Vec<Vec<u8>>),
}

/// Parses a config document, rejecting unknown keys and a mismatched
/// `experiment` field.
pub fn parse<T: serde::de::DeserializeOwned + Experiment>(text: &str, kind: &str) -> Result<T> {
    let config: T =
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
    match config.declared_kind() {
        Some(k) if k != kind => Err(ExperimentError::Config(format!(
            "config is for experiment {k:?}, not {kind:?}"
        ))),
        _ => Ok(config),
    }
}

/// Fields every experiment config carries.
pub trait Experiment {
    fn declared_kind(&self) -> Option<&str>;
    fn seed(&self) -> Option<u64>;
}

macro_rules! impl_experiment {
    ($($t:ty),*) => {$(
        impl $crate::config::Experiment for $t {
            fn declared_kind(&self) -> Option<&str> {
                self.experiment.as_deref()
            }
            fn seed(&self) -> Option<u64> {
                self.seed
            }
        }
    )*};
}
pub(crate) use impl_experiment;
