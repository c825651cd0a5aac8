use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::densities::{fit_gaussian_conditional, DiscreteDistribution, GaussianConditional};
use crate::error::{invalid, Result};
use crate::ols::ols;
use crate::weights::WeightFunction;

/// A conditional log-density `log q(y | x)`.
pub trait ConditionalDensity: Send + Sync + Debug {
    fn logpdf(&self, y: f64, x: &[f64]) -> Result<f64>;
}

impl ConditionalDensity for GaussianConditional<f64> {
    fn logpdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        GaussianConditional::logpdf(self, y, x)
    }
}

impl ConditionalDensity for DiscreteDistribution {
    fn logpdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        if !x.is_empty() {
            return Err(invalid("a discrete marginal takes no covariates"));
        }
        Ok(self.pmf(y).ln())
    }
}

/// Gaussian conditional that is linear in the powers `x_j, x_j², …, x_j^d`
/// of every covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialGaussian {
    pub degree: u32,
    pub inner: GaussianConditional<f64>,
}

fn expand(x: &[f64], degree: u32) -> Vec<f64> {
    x.iter()
        .flat_map(|&v| (1..=degree as i32).map(move |p| v.powi(p)))
        .collect()
}

impl ConditionalDensity for PolynomialGaussian {
    fn logpdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        self.inner.logpdf(y, &expand(x, self.degree))
    }
}

/// Least squares on polynomial features; noise scale from the residuals.
pub fn fit_polynomial_gaussian<S: AsRef<str>>(
    data: &Dataset,
    response: &str,
    covariates: &[S],
    degree: u32,
) -> Result<PolynomialGaussian> {
    if degree == 0 {
        return Err(invalid("polynomial degree must be positive"));
    }
    let y = data.column(response)?;
    let mut design = Vec::new();
    for c in covariates {
        let col = data.column(c.as_ref())?;
        for p in 1..=degree as i32 {
            design.push(col.iter().map(|v| v.powi(p)).collect::<Vec<f64>>());
        }
    }
    if design.is_empty() {
        return Ok(PolynomialGaussian {
            degree,
            inner: fit_gaussian_conditional::<&str>(data, response, &[])?,
        });
    }
    let fit = ols(&y, &design)?;
    let inner = GaussianConditional::new(
        fit.coefficients[0],
        fit.coefficients[1..].to_vec(),
        fit.sigma().max(crate::densities::NOISE_SD_FLOOR),
    )?;
    Ok(PolynomialGaussian { degree, inner })
}

/// Empirical conditional probability table of a discrete response.
///
/// Covariate patterns never seen in the fitting data have density zero.
#[derive(Debug, Clone, Default)]
pub struct DiscreteConditional {
    cells: HashMap<Vec<u64>, Vec<(f64, f64)>>,
}

fn key(x: &[f64]) -> Vec<u64> {
    // normalize -0.0 so it shares a cell with 0.0
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl DiscreteConditional {
    pub fn fit<S: AsRef<str>>(data: &Dataset, response: &str, covariates: &[S]) -> Result<Self> {
        let y = data.column(response)?;
        let idx = data.column_indices(covariates)?;
        if y.is_empty() {
            return Err(invalid("cannot fit a conditional table on no rows"));
        }
        let mut counts: HashMap<Vec<u64>, Vec<(f64, f64)>> = HashMap::new();
        for (i, &yi) in y.iter().enumerate() {
            let x: Vec<f64> = idx.iter().map(|&j| data.get(i, j)).collect();
            let cell = counts.entry(key(&x)).or_default();
            match cell.iter_mut().find(|(v, _)| *v == yi) {
                Some((_, c)) => *c += 1.0,
                None => cell.push((yi, 1.0)),
            }
        }
        for cell in counts.values_mut() {
            let total: f64 = cell.iter().map(|(_, c)| c).sum();
            for (_, c) in cell.iter_mut() {
                *c /= total;
            }
        }
        Ok(Self { cells: counts })
    }

    pub fn prob(&self, y: f64, x: &[f64]) -> f64 {
        self.cells
            .get(&key(x))
            .and_then(|cell| cell.iter().find(|(v, _)| *v == y))
            .map_or(0.0, |(_, p)| *p)
    }
}

impl ConditionalDensity for DiscreteConditional {
    fn logpdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.prob(y, x).ln())
    }
}

/// A density together with the columns it reads.
#[derive(Debug, Clone)]
pub struct BoundDensity {
    pub density: Arc<dyn ConditionalDensity>,
    pub response: String,
    pub covariates: Vec<String>,
}

impl BoundDensity {
    pub fn new<S: AsRef<str>>(
        density: Arc<dyn ConditionalDensity>,
        response: &str,
        covariates: &[S],
    ) -> Self {
        Self {
            density,
            response: response.to_string(),
            covariates: covariates.iter().map(|c| c.as_ref().to_string()).collect(),
        }
    }

    fn columns(&self) -> impl Iterator<Item = &String> {
        std::iter::once(&self.response).chain(&self.covariates)
    }
}

/// `r = numerator / denominator`, evaluated in log space.
///
/// Rows where the numerator vanishes get weight zero; rows where only the
/// denominator vanishes surface as support violations.
pub fn ratio_weights(numerator: BoundDensity, denominator: BoundDensity) -> WeightFunction {
    let mut domain: Vec<String> = Vec::new();
    for c in numerator.columns().chain(denominator.columns()) {
        if !domain.contains(c) {
            domain.push(c.clone());
        }
    }
    let locate = |d: &BoundDensity| -> Vec<usize> {
        d.columns()
            .map(|c| domain.iter().position(|e| e == c).unwrap())
            .collect()
    };
    let (ni, di) = (locate(&numerator), locate(&denominator));
    let (num, den) = (numerator.density, denominator.density);
    WeightFunction::try_new(domain, move |row| {
        let nx: Vec<f64> = ni[1..].iter().map(|&i| row[i]).collect();
        let ln_num = num.logpdf(row[ni[0]], &nx)?;
        if ln_num == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let dx: Vec<f64> = di[1..].iter().map(|&i| row[i]).collect();
        let ln_den = den.logpdf(row[di[0]], &dx)?;
        Ok((ln_num - ln_den).exp())
    })
}

/// A density specification resolved against data at use time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityModel {
    /// A fixed linear Gaussian conditional (a marginal without covariates).
    Gaussian {
        response: String,
        #[serde(default)]
        covariates: Vec<String>,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        coefficients: Vec<f64>,
        noise_sd: f64,
    },
    /// Linear Gaussian conditional fitted by least squares.
    FittedGaussian {
        response: String,
        #[serde(default)]
        covariates: Vec<String>,
    },
    /// A fixed probability mass function on a finite set.
    Discrete {
        response: String,
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    /// Empirical conditional probability table.
    FittedDiscrete {
        response: String,
        #[serde(default)]
        covariates: Vec<String>,
    },
}

impl DensityModel {
    pub fn standard_normal(response: &str) -> Self {
        Self::Gaussian {
            response: response.to_string(),
            covariates: Vec::new(),
            intercept: 0.0,
            coefficients: Vec::new(),
            noise_sd: 1.0,
        }
    }

    pub fn response(&self) -> &str {
        match self {
            Self::Gaussian { response, .. }
            | Self::FittedGaussian { response, .. }
            | Self::Discrete { response, .. }
            | Self::FittedDiscrete { response, .. } => response,
        }
    }

    pub fn covariates(&self) -> &[String] {
        match self {
            Self::Gaussian { covariates, .. }
            | Self::FittedGaussian { covariates, .. }
            | Self::FittedDiscrete { covariates, .. } => covariates,
            Self::Discrete { .. } => &[],
        }
    }

    /// Fixed models ignore `data`; fitted ones are estimated on it.
    pub fn resolve(&self, data: &Dataset) -> Result<BoundDensity> {
        let density: Arc<dyn ConditionalDensity> = match self {
            Self::Gaussian {
                covariates,
                intercept,
                coefficients,
                noise_sd,
                ..
            } => {
                if covariates.len() != coefficients.len() {
                    return Err(invalid(format!(
                        "gaussian density has {} covariates but {} coefficients",
                        covariates.len(),
                        coefficients.len()
                    )));
                }
                Arc::new(GaussianConditional::new(*intercept, coefficients.clone(), *noise_sd)?)
            }
            Self::FittedGaussian {
                response,
                covariates,
            } => Arc::new(fit_gaussian_conditional(data, response, covariates)?),
            Self::Discrete { values, probs, .. } => {
                Arc::new(DiscreteDistribution::new(values.clone(), probs.clone())?)
            }
            Self::FittedDiscrete {
                response,
                covariates,
            } => Arc::new(DiscreteConditional::fit(data, response, covariates)?),
        };
        Ok(BoundDensity::new(density, self.response(), self.covariates()))
    }
}

/// Fits a conditional density from data.
pub trait Estimator: Send + Sync + Debug {
    fn fit(&self, data: &Dataset, response: &str, covariates: &[String]) -> Result<Arc<dyn ConditionalDensity>>;
}

/// Built-in estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Linear Gaussian regression.
    #[default]
    Gaussian,
    /// Gaussian regression on covariate powers up to `degree`.
    Polynomial { degree: u32 },
    /// Empirical conditional frequencies.
    Discrete,
}

impl Estimator for EstimatorKind {
    fn fit(&self, data: &Dataset, response: &str, covariates: &[String]) -> Result<Arc<dyn ConditionalDensity>> {
        Ok(match *self {
            Self::Gaussian => Arc::new(fit_gaussian_conditional(data, response, covariates)?),
            Self::Polynomial { degree } => {
                Arc::new(fit_polynomial_gaussian(data, response, covariates, degree)?)
            }
            Self::Discrete => Arc::new(DiscreteConditional::fit(data, response, covariates)?),
        })
    }
}

/// Returns a known density regardless of the data.
#[derive(Debug, Clone)]
pub struct Oracle(pub Arc<dyn ConditionalDensity>);

impl Estimator for Oracle {
    fn fit(&self, _: &Dataset, _: &str, _: &[String]) -> Result<Arc<dyn ConditionalDensity>> {
        Ok(self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn data() -> Dataset {
        Dataset::from_rows(
            vec!["x".into(), "y".into()],
            &[
                vec![0.0, 1.0],
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn discrete_table() {
        let t = DiscreteConditional::fit(&data(), "y", &["x"]).unwrap();
        assert!((t.prob(1.0, &[0.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.prob(1.0, &[1.0]), 1.0);
        assert_eq!(t.prob(0.0, &[1.0]), 0.0);
        assert_eq!(t.prob(0.0, &[-0.0]), t.prob(0.0, &[0.0]));
        assert_eq!(t.prob(1.0, &[2.0]), 0.0);
    }

    #[test]
    fn ratio_zero_and_support() {
        let d = data();
        let num = DensityModel::FittedDiscrete {
            response: "y".into(),
            covariates: vec![],
        }
        .resolve(&d)
        .unwrap();
        let den = BoundDensity::new(Arc::new(DiscreteConditional::fit(&d, "y", &["x"]).unwrap()), "y", &["x"]);
        let w = ratio_weights(num, den).evaluate(&d).unwrap();
        // q(y) / q(y | x)
        assert!((w[0] - 0.75 / (2.0 / 3.0)).abs() < 1e-15);
        assert!((w[1] - 0.25 / (1.0 / 3.0)).abs() < 1e-15);
        assert!((w[3] - 0.75).abs() < 1e-15);

        let point = BoundDensity::new(Arc::new(DiscreteDistribution::new(vec![1.0], vec![1.0]).unwrap()), "y", &[] as &[&str]);
        let num = BoundDensity::new(Arc::new(DiscreteDistribution::bernoulli(0.5).unwrap()), "y", &[] as &[&str]);
        assert!(matches!(
            ratio_weights(num, point.clone()).evaluate(&d),
            Err(Error::SupportViolation { row: 2 })
        ));
        let zero = BoundDensity::new(Arc::new(DiscreteDistribution::new(vec![0.0], vec![1.0]).unwrap()), "y", &[] as &[&str]);
        let w = ratio_weights(zero, point).evaluate(&d);
        assert!(matches!(w, Err(Error::SupportViolation { row: 2 })));
    }

    #[test]
    fn polynomial_fit_recovers_square() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x * x + 0.5 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let d = Dataset::from_columns(vec!["x".into(), "y".into()], &[xs, ys]).unwrap();
        let p = fit_polynomial_gaussian(&d, "y", &["x"], 2).unwrap();
        assert!((p.inner.coefficients[1] - 1.0).abs() < 0.01);
        assert!(p.inner.coefficients[0].abs() < 0.01);
        assert!((p.inner.intercept - 0.5).abs() < 0.02);
    }
}
