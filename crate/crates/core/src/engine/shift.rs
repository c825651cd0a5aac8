use std::sync::Arc;

use serde::Deserialize;

use super::density::{ratio_weights, DensityModel, Estimator, EstimatorKind};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::expr::Expr;
use crate::weights::WeightFunction;

/// How the shift factor `r` is obtained.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "ShiftConfig")]
pub enum ShiftSpec {
    /// `r = numerator / denominator` for two density models.
    Ratio {
        numerator: DensityModel,
        denominator: DensityModel,
    },
    /// A weight function given directly.
    Explicit(WeightFunction),
    /// The denominator `q(response | covariates)` is fitted from data.
    Estimated {
        response: String,
        covariates: Vec<String>,
        numerator: DensityModel,
        estimator: Arc<dyn Estimator>,
    },
}

impl ShiftSpec {
    pub fn identity() -> Self {
        Self::Explicit(WeightFunction::identity())
    }

    pub fn estimated<S: AsRef<str>>(
        response: &str,
        covariates: &[S],
        numerator: DensityModel,
        estimator: Arc<dyn Estimator>,
    ) -> Self {
        Self::Estimated {
            response: response.to_string(),
            covariates: covariates.iter().map(|c| c.as_ref().to_string()).collect(),
            numerator,
            estimator,
        }
    }

    pub fn is_estimated(&self) -> bool {
        matches!(self, Self::Estimated { .. })
    }

    /// Resolves to a weight function; fitted components are estimated on `fit_data`.
    pub fn weight_function(&self, fit_data: &Dataset) -> Result<WeightFunction> {
        match self {
            Self::Ratio {
                numerator,
                denominator,
            } => Ok(ratio_weights(numerator.resolve(fit_data)?, denominator.resolve(fit_data)?)),
            Self::Explicit(w) => Ok(w.clone()),
            Self::Estimated {
                response,
                covariates,
                numerator,
                estimator,
            } => {
                let den = estimator.fit(fit_data, response, covariates)?;
                Ok(ratio_weights(
                    numerator.resolve(fit_data)?,
                    super::density::BoundDensity::new(den, response, covariates),
                ))
            }
        }
    }

    /// Weights on every row of `data`, with fitted parts estimated on `data` too.
    pub fn weights(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.weight_function(data)?.evaluate(data)
    }
}

/// Serialized form of [`ShiftSpec`].
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftConfig {
    Identity,
    Ratio {
        numerator: DensityModel,
        denominator: DensityModel,
    },
    /// An arithmetic expression over column names, e.g. `"2*x"`.
    Explicit { expression: String },
    Estimated {
        response: String,
        #[serde(default)]
        covariates: Vec<String>,
        numerator: DensityModel,
        #[serde(default)]
        estimator: EstimatorKind,
    },
}

/// Weight function from an expression over columns.
pub fn expression_weights(source: &str) -> Result<WeightFunction> {
    let expr = Expr::parse(source)?;
    let domain = expr.variables().to_vec();
    Ok(WeightFunction::new(domain, move |x| expr.eval(x)))
}

impl TryFrom<ShiftConfig> for ShiftSpec {
    type Error = crate::error::Error;

    fn try_from(c: ShiftConfig) -> Result<Self> {
        Ok(match c {
            ShiftConfig::Identity => Self::identity(),
            ShiftConfig::Ratio {
                numerator,
                denominator,
            } => Self::Ratio {
                numerator,
                denominator,
            },
            ShiftConfig::Explicit { expression } => {
                if expression.trim().is_empty() {
                    return Err(invalid("explicit shift needs a nonempty expression"));
                }
                Self::Explicit(expression_weights(&expression)?)
            }
            ShiftConfig::Estimated {
                response,
                covariates,
                numerator,
                estimator,
            } => Self::Estimated {
                response,
                covariates,
                numerator,
                estimator: Arc::new(estimator),
            },
        })
    }
}
