use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::num::{cast, Real};
use crate::ols::ols_columns;

/// Floor for fitted residual scales, keeping density ratios finite on exact fits.
pub const NOISE_SD_FLOOR: f64 = 1e-12;

/// `x^j | x^B ~ N(intercept + coefficients · x^B, noise_sd²)`.
///
/// With no coefficients this is a plain Gaussian marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianConditional<T: Real = f64> {
    pub intercept: T,
    #[serde(default)]
    pub coefficients: Vec<T>,
    pub noise_sd: T,
}

impl<T: Real> GaussianConditional<T> {
    pub fn new(intercept: T, coefficients: Vec<T>, noise_sd: T) -> Result<Self> {
        if !(noise_sd > T::zero()) || !noise_sd.is_finite() {
            return Err(invalid(format!("noise_sd must be positive, got {noise_sd:?}")));
        }
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        Ok(Self {
            intercept,
            coefficients,
            noise_sd,
        })
    }

    pub fn marginal(mean: T, sd: T) -> Result<Self> {
        Self::new(mean, Vec::new(), sd)
    }

    pub fn standard() -> Self {
        Self {
            intercept: T::zero(),
            coefficients: Vec::new(),
            noise_sd: T::one(),
        }
    }

    pub fn mean(&self, covariates: &[T]) -> T {
        debug_assert_eq!(covariates.len(), self.coefficients.len());
        self.coefficients
            .iter()
            .zip(covariates)
            .fold(self.intercept, |acc, (&b, &x)| acc + b * x)
    }

    pub fn logpdf(&self, y: T, covariates: &[T]) -> Result<T> {
        if covariates.len() != self.coefficients.len() {
            return Err(invalid(format!(
                "expected {} covariates, got {}",
                self.coefficients.len(),
                covariates.len()
            )));
        }
        let z = (y - self.mean(covariates)) / self.noise_sd;
        let half_ln_2pi: T = cast(0.918_938_533_204_672_8);
        Ok(-half_ln_2pi - self.noise_sd.ln() - z * z / (T::one() + T::one()))
    }
}

/// Gaussian log density with model parameters supplied by `model`, evaluated at `y`.
pub fn gaussian_conditional_logpdf<T: Real>(
    model: &GaussianConditional<T>,
    y: T,
    covariates: &[T],
) -> Result<T> {
    model.logpdf(y, covariates)
}

/// Least-squares fit of `response` on `covariates` with an intercept; the
/// noise scale is the residual standard deviation on `n - p - 1` degrees of
/// freedom, floored at [`NOISE_SD_FLOOR`].
pub fn fit_gaussian_conditional<S: AsRef<str>>(
    data: &Dataset,
    response: &str,
    covariates: &[S],
) -> Result<GaussianConditional<f64>> {
    if covariates.is_empty() {
        let y = data.column(response)?;
        let n = y.len();
        if n < 2 {
            return Err(invalid("need at least two rows to fit a marginal"));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        return GaussianConditional::marginal(mean, var.sqrt().max(NOISE_SD_FLOOR));
    }
    let fit = ols_columns(data, response, covariates)?;
    GaussianConditional::new(
        fit.coefficients[0],
        fit.coefficients[1..].to_vec(),
        fit.sigma().max(NOISE_SD_FLOOR),
    )
}
