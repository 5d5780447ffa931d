//! Experiment harness around `cart-core`: convergence rates, interval
//! coverage, the xor lower bound, assumption diagnostics and oracle tables.
//!
//! Each experiment reads one JSON config and returns a `rows.csv` body and a
//! `summary.json` document. Replicates draw from streams derived from the
//! master seed, so outputs are byte-identical for any thread count.

pub mod config;
pub mod coverage;
pub mod diagnose;
mod error;
pub mod oracle_table;
mod output;
pub mod rate;
pub mod stats;
pub mod xor;

use std::fmt;
use std::str::FromStr;

use cart_core::seed::SeedSpec;

use config::{parse, Experiment};
pub use error::{ExperimentError, Result};
pub use output::Output;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Rate,
    Coverage,
    Xor,
    Diagnose,
    OracleTable,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Rate,
        ExperimentKind::Coverage,
        ExperimentKind::Xor,
        ExperimentKind::Diagnose,
        ExperimentKind::OracleTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rate => "rate",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Xor => "xor",
            ExperimentKind::Diagnose => "diagnose",
            ExperimentKind::OracleTable => "oracle-table",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment {s:?}")))
    }
}

fn master_seed<T: Experiment>(config: &T, seed_override: Option<u64>) -> SeedSpec {
    SeedSpec::new(seed_override.or(config.seed()).unwrap_or(0))
}

/// Runs one experiment on the current rayon pool.
pub fn run(kind: ExperimentKind, config_text: &str, seed_override: Option<u64>) -> Result<Output> {
    let name = kind.name();
    match kind {
        ExperimentKind::Rate => {
            let c: rate::RateConfig = parse(config_text, name)?;
            rate::run(&c, master_seed(&c, seed_override))
        }
        ExperimentKind::Coverage => {
            let c: coverage::CoverageConfig = parse(config_text, name)?;
            coverage::run(&c, master_seed(&c, seed_override))
        }
        ExperimentKind::Xor => {
            let c: xor::XorConfig = parse(config_text, name)?;
            xor::run(&c, master_seed(&c, seed_override))
        }
        ExperimentKind::Diagnose => {
            let c: diagnose::DiagnoseConfig = parse(config_text, name)?;
            diagnose::run(&c)
        }
        ExperimentKind::OracleTable => {
            let c: oracle_table::OracleTableConfig = parse(config_text, name)?;
            oracle_table::run(&c)
        }
    }
}

/// Runs one experiment on a dedicated pool of `threads` workers
/// (`None` uses rayon's default).
pub fn run_with_threads(
    kind: ExperimentKind,
    config_text: &str,
    seed_override: Option<u64>,
    threads: Option<usize>,
) -> Result<Output> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(kind, config_text, seed_override))
}
