//! Second-order polynomial maximization (PMM2) estimation for ARIMA models
//! driven by skewed, non-Gaussian innovations.
//!
//! The estimator starts from a classical CSS or least-squares fit, calibrates
//! second-, third- and fourth-order moments on its residuals and solves the
//! resulting polynomial estimating equations by Newton-Raphson. For skewed
//! innovations this reduces the asymptotic variance of the ARMA coefficients
//! relative to least squares.
//!
//! ```
//! use pmm2_arima::{arima, distributions, pmm2};
//! use pmm2_arima::distributions::InnovationSpec;
//!
//! let model = arima::ModelSpec::new(vec![0.7], 1, vec![]);
//! let eps = distributions::sample(&InnovationSpec::Gamma { shape: 2.0, scale: 1.0 }, 700, 42).unwrap();
//! let y = arima::simulate(&model, &eps, 200).unwrap();
//! let fit = pmm2::fit(&y, 1, 1, 0, &Default::default()).unwrap();
//! assert!((fit.theta_hat[0] - 0.7).abs() < 0.1);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arima;
pub mod asymptotics;
pub mod baseline;
pub mod diagnostics;
pub mod distributions;
pub mod error;
mod linalg;
pub mod moments;
pub mod montecarlo;
pub mod numfmt;
pub mod pmm2;
pub mod rng;

use serde::{Deserialize, Serialize};

pub use arima::ModelSpec;
pub use baseline::BaselineFit;
pub use distributions::InnovationSpec;
pub use error::{Error, Result};
pub use moments::MomentSet;
pub use pmm2::{Pmm2Config, Pmm2Fit};

/// Estimation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ols,
    Css,
    Pmm2,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Css => "css",
            Method::Pmm2 => "pmm2",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(Method::Ols),
            "css" => Ok(Method::Css),
            "pmm2" => Ok(Method::Pmm2),
            other => Err(Error::Parameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Common view of a fitted ARIMA model.
pub trait FittedArima {
    /// Fitted model on the original scale (with `d` and any constant).
    fn model(&self) -> &ModelSpec;
    /// Residuals on the differenced scale after the presample.
    fn residuals(&self) -> &[f64];
    /// Number of estimated mean-equation parameters.
    fn n_params(&self) -> usize;
    fn method(&self) -> Method;
}
