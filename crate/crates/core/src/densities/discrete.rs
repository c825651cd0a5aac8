use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A distribution on finitely many real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscrete")]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDiscrete {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawDiscrete> for DiscreteDistribution {
    type Error = crate::error::Error;

    fn try_from(raw: RawDiscrete) -> Result<Self> {
        Self::new(raw.values, raw.probs)
    }
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(invalid("support and probabilities must be nonempty and of equal length"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(invalid("probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            values,
            probs,
            cumulative,
        })
    }

    /// Bernoulli(p) on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, x: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v == x)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.values[k.min(self.values.len() - 1)]
    }
}
