//! Greedy CART-style regression trees and honest subsampled forests over
//! binary feature vectors.
//!
//! The crate is organised around five pieces:
//!
//! * [`data`]: feature distributions on `{0,1}^d`, sparse targets, bounded
//!   noise, dataset sampling and honest half-splitting.
//! * [`oracle`]: exact population functionals (explained heterogeneity,
//!   leaf criteria, value diameters), the population tree algorithms and
//!   computable diagnostics for the structural assumptions.
//! * [`tree`]: finite-sample level-split and per-cell (Breiman) trees.
//! * [`forest`]: subsampled honest forests, infinitesimal-jackknife variance
//!   and normal confidence intervals.
//! * [`seed`]: deterministic derivation of independent random streams.
//!
//! Coordinates are 0-based everywhere in the Rust API. External formats
//! (CSV headers, JSON documents) use 1-based coordinates.

pub mod bits;
pub mod data;
mod error;
pub mod forest;
pub mod oracle;
pub mod seed;
mod select;
pub mod tree;

pub use error::{Error, Result};
