//! Central moments up to order four and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Central moments `mu2, mu3, mu4` with `delta = mu2 (mu4 - mu2^2) - mu3^2`,
/// skewness `gamma3` and excess kurtosis `gamma4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub delta: f64,
    pub gamma3: f64,
    pub gamma4: f64,
}

impl MomentSet {
    /// Builds a moment set, rejecting zero variance and `delta <= 0`.
    pub fn from_central(mu2: f64, mu3: f64, mu4: f64) -> Result<Self> {
        let m = Self::unchecked(mu2, mu3, mu4);
        if !(mu2.is_finite() && mu3.is_finite() && mu4.is_finite()) {
            return Err(Error::Degenerate("non-finite moments".into()));
        }
        if mu2 <= 0.0 {
            return Err(Error::Degenerate(format!("variance {mu2} is not positive")));
        }
        if m.delta <= 0.0 {
            return Err(Error::Degenerate(format!(
                "delta = mu2(mu4 - mu2^2) - mu3^2 = {} is not positive",
                m.delta
            )));
        }
        Ok(m)
    }

    pub(crate) fn unchecked(mu2: f64, mu3: f64, mu4: f64) -> Self {
        let delta = mu2 * (mu4 - mu2 * mu2) - mu3 * mu3;
        MomentSet {
            mu2,
            mu3,
            mu4,
            delta,
            gamma3: mu3 / mu2.powf(1.5),
            gamma4: mu4 / (mu2 * mu2) - 3.0,
        }
    }

    /// `mu4 - mu2^2`, the weight on the linear term of the PMM2 score.
    pub fn fourth_cumulant_weight(&self) -> f64 {
        self.mu4 - self.mu2 * self.mu2
    }

    /// True when `delta` is too small relative to the scale of the data for
    /// the PMM2 weights to be meaningful.
    pub fn is_degenerate(&self) -> bool {
        !(self.mu2 > 0.0) || !(self.delta > 1e-12 * self.mu2.powi(3))
    }
}

/// Raw central moments `(mu2, mu3, mu4)` about the sample mean, divisor `n`.
pub fn central_moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    (s2 / n, s3 / n, s4 / n)
}

/// Sample moments of a residual series.
pub fn sample_moments(residuals: &[f64]) -> Result<MomentSet> {
    if residuals.len() < 3 {
        return Err(Error::Length {
            needed: 3,
            got: residuals.len(),
        });
    }
    let (mu2, mu3, mu4) = central_moments(residuals);
    MomentSet::from_central(mu2, mu3, mu4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_three_points() {
        let m = sample_moments(&[-1.0, 0.0, 1.0]).unwrap();
        assert!((m.mu2 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.mu3, 0.0);
        assert!((m.mu4 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.delta - 4.0 / 27.0).abs() < 1e-15);
        assert_eq!(m.gamma3, 0.0);
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(sample_moments(&[2.0; 10]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_point_law_has_zero_delta() {
        // Bernoulli-type residuals attain the Pearson bound exactly.
        let xs = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let err = sample_moments(&xs).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn too_short() {
        assert!(matches!(sample_moments(&[1.0, 2.0]), Err(Error::Length { .. })));
    }
}
