use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Zero-mean additive noise with support inside `[-1/2, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRepr", into = "NoiseRepr")]
pub enum NoiseModel {
    None,
    /// Uniform on `[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
    /// `±magnitude` with equal probability.
    Rademacher {
        magnitude: f64,
    },
}

impl NoiseModel {
    pub fn uniform(half_width: f64) -> Result<Self> {
        check_scale(half_width)?;
        Ok(Self::Uniform { half_width })
    }

    pub fn rademacher(magnitude: f64) -> Result<Self> {
        check_scale(magnitude)?;
        Ok(Self::Rademacher { magnitude })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Uniform { half_width } => half_width * half_width / 3.0,
            Self::Rademacher { magnitude } => magnitude * magnitude,
        }
    }

    /// Largest possible `|ε|`.
    pub fn bound(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Uniform { half_width } => half_width,
            Self::Rademacher { magnitude } => magnitude,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Uniform { half_width } => (2.0 * rng.random::<f64>() - 1.0) * half_width,
            Self::Rademacher { magnitude } => {
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

fn check_scale(v: f64) -> Result<()> {
    if (0.0..=0.5).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidNoise(format!("scale {v} outside [0, 1/2]")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NoiseRepr {
    None,
    Uniform { half_width: f64 },
    Rademacher { magnitude: f64 },
}

impl TryFrom<NoiseRepr> for NoiseModel {
    type Error = Error;

    fn try_from(repr: NoiseRepr) -> Result<Self> {
        match repr {
            NoiseRepr::None => Ok(Self::None),
            NoiseRepr::Uniform { half_width } => Self::uniform(half_width),
            NoiseRepr::Rademacher { magnitude } => Self::rademacher(magnitude),
        }
    }
}

impl From<NoiseModel> for NoiseRepr {
    fn from(n: NoiseModel) -> Self {
        match n {
            NoiseModel::None => Self::None,
            NoiseModel::Uniform { half_width } => Self::Uniform { half_width },
            NoiseModel::Rademacher { magnitude } => Self::Rademacher { magnitude },
        }
    }
}
