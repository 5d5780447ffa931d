use serde::{Deserialize, Serialize};

use crate::bits::{get_bit, BitVector};
use crate::{Error, Result};

/// Largest supported number of relevant coordinates.
pub const MAX_RELEVANT: usize = 20;

/// An `r`-sparse regression function `m(x) = h(x_R)`.
///
/// The table is indexed by `Σ_k x[R[k]] << k`: the first relevant coordinate
/// is the low bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseTarget {
    d: usize,
    relevant: Vec<usize>,
    table: Vec<f64>,
}

impl SparseTarget {
    pub fn new(d: usize, relevant: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if relevant.len() > d {
            return Err(Error::InvalidTarget(format!(
                "{} relevant coordinates exceed dimension {d}",
                relevant.len()
            )));
        }
        if relevant.len() > MAX_RELEVANT {
            return Err(Error::CapExceeded {
                what: "sparse target",
                needed: relevant.len(),
                cap: MAX_RELEVANT,
            });
        }
        let mut seen = vec![false; d];
        for &c in &relevant {
            if c >= d {
                return Err(Error::InvalidTarget(format!(
                    "relevant coordinate {} outside dimension {d}",
                    c + 1
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidTarget(format!(
                    "relevant coordinate {} repeated",
                    c + 1
                )));
            }
        }
        if table.len() != 1 << relevant.len() {
            return Err(Error::InvalidTarget(format!(
                "table needs {} entries, got {}",
                1usize << relevant.len(),
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|v| !(-0.5..=0.5).contains(*v)) {
            return Err(Error::InvalidTarget(format!(
                "table value {v} outside [-1/2, 1/2]"
            )));
        }
        Ok(Self { d, relevant, table })
    }

    pub fn constant(d: usize, value: f64) -> Result<Self> {
        Self::new(d, Vec::new(), vec![value])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn relevant(&self) -> &[usize] {
        &self.relevant
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Table index of a packed point.
    #[inline]
    pub fn index_of(&self, words: &[u64]) -> usize {
        self.relevant.iter().enumerate().fold(0, |acc, (k, &c)| {
            acc | (usize::from(get_bit(words, c)) << k)
        })
    }

    #[inline]
    pub fn eval_words(&self, words: &[u64]) -> f64 {
        self.table[self.index_of(words)]
    }

    pub fn eval(&self, x: &BitVector) -> Result<f64> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: x.dim(),
            });
        }
        Ok(self.eval_words(x.words()))
    }
}

/// JSON form of a target; the dimension comes from the accompanying
/// distribution. Coordinates are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub relevant: Vec<usize>,
    pub table: Vec<f64>,
}

impl TargetSpec {
    pub fn build(&self, d: usize) -> Result<SparseTarget> {
        let relevant = self
            .relevant
            .iter()
            .map(|&c| {
                c.checked_sub(1)
                    .ok_or_else(|| Error::InvalidTarget("coordinates are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        SparseTarget::new(d, relevant, self.table.clone())
    }
}

impl From<&SparseTarget> for TargetSpec {
    fn from(t: &SparseTarget) -> Self {
        Self {
            relevant: t.relevant.iter().map(|c| c + 1).collect(),
            table: t.table.clone(),
        }
    }
}
