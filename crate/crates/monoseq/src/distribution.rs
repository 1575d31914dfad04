//! Observation models and the coordinate dictionary between them.
//!
//! All tables are computed once in the uniform coordinate u = F(x); the
//! exponential model is reached through the strictly increasing map
//! x = -log(1 - u) and never needs its own quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two continuous observation models supported by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionModel {
    /// Uniform on [0, 1]; F is the identity on the support.
    Uniform01,
    /// Exponential with mean 1; F(x) = 1 - exp(-x).
    ExponentialMean1,
}

impl DistributionModel {
    /// Support interval as (lower, upper).
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistributionModel::Uniform01 => (0.0, 1.0),
            DistributionModel::ExponentialMean1 => (0.0, f64::INFINITY),
        }
    }
}

/// Distribution function; total on the reals by clamping outside the support.
pub fn cdf(model: DistributionModel, x: f64) -> f64 {
    match model {
        DistributionModel::Uniform01 => x.clamp(0.0, 1.0),
        DistributionModel::ExponentialMean1 => {
            if x <= 0.0 {
                0.0
            } else {
                -(-x).exp_m1()
            }
        }
    }
}

/// Density; zero outside the support.
pub fn pdf(model: DistributionModel, x: f64) -> f64 {
    match model {
        DistributionModel::Uniform01 => {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        DistributionModel::ExponentialMean1 => {
            if x < 0.0 {
                0.0
            } else {
                (-x).exp()
            }
        }
    }
}

/// Inverse distribution function on u in [0, 1).
pub fn quantile(model: DistributionModel, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::OutOfDomain {
            name: "u",
            value: u,
            range: "[0, 1)",
        });
    }
    Ok(match model {
        DistributionModel::Uniform01 => u,
        DistributionModel::ExponentialMean1 => -(-u).ln_1p(),
    })
}

/// Model coordinate to uniform coordinate: u = F(s).
pub fn to_uniform_coord(model: DistributionModel, s: f64) -> f64 {
    cdf(model, s)
}

/// Uniform coordinate to exponential coordinate: -log(1 - u).
pub fn to_exponential_coord(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::OutOfDomain {
            name: "u",
            value: u,
            range: "[0, 1)",
        });
    }
    Ok(-(-u).ln_1p())
}
