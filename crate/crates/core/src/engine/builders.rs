use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;

use super::density::{ratio_weights, BoundDensity};
use crate::data::Dataset;
use crate::densities::{fit_gaussian_conditional, GaussianConditional};
use crate::error::{invalid, Result};
use crate::weights::WeightFunction;

/// Shift factor replacing `q(z | x)` by a marginal `φ(z)`.
///
/// Missing models are fitted on `data`: the conditional by least squares and
/// the target as the empirical Gaussian marginal of `z`.
pub fn ci_reduction_weights<S: AsRef<str>>(
    data: &Dataset,
    conditional: Option<&GaussianConditional<f64>>,
    target_marginal: Option<&GaussianConditional<f64>>,
    z: &str,
    x: &[S],
) -> Result<WeightFunction> {
    data.column_index(z)?;
    data.column_indices(x)?;
    let conditional = match conditional {
        Some(c) => c.clone(),
        None => fit_gaussian_conditional(data, z, x)?,
    };
    if conditional.coefficients.len() != x.len() {
        return Err(invalid(format!(
            "conditional has {} coefficients for {} covariates",
            conditional.coefficients.len(),
            x.len()
        )));
    }
    let target = match target_marginal {
        Some(t) => t.clone(),
        None => fit_gaussian_conditional::<&str>(data, z, &[])?,
    };
    if !target.coefficients.is_empty() {
        return Err(invalid("the target must be a marginal density"));
    }
    Ok(ratio_weights(
        BoundDensity::new(Arc::new(target), z, &[] as &[&str]),
        BoundDensity::new(Arc::new(conditional), z, x),
    ))
}

/// A stochastic policy `π(a | z)` over a finite action set.
pub trait Policy: Send + Sync + Debug {
    fn actions(&self) -> &[f64];

    /// Probabilities of [`Policy::actions`] in context `z`.
    fn probs(&self, z: &[f64]) -> Vec<f64>;

    fn prob(&self, action: f64, z: &[f64]) -> f64 {
        self.actions()
            .iter()
            .position(|&a| a == action)
            .map_or(0.0, |i| self.probs(z)[i])
    }

    fn sample(&self, z: &[f64], rng: &mut dyn rand::RngCore) -> f64 {
        let p = self.probs(z);
        let mut u: f64 = rng.random();
        for (a, pi) in self.actions().iter().zip(&p) {
            if u < *pi {
                return *a;
            }
            u -= pi;
        }
        // rounding: fall back to the last action with positive mass
        let last = p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1);
        self.actions()[last]
    }
}

/// Every action with probability `1/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformPolicy {
    pub actions: Vec<f64>,
}

impl Policy for UniformPolicy {
    fn actions(&self) -> &[f64] {
        &self.actions
    }

    fn probs(&self, _: &[f64]) -> Vec<f64> {
        vec![1.0 / self.actions.len() as f64; self.actions.len()]
    }
}

/// `π(a | z) ∝ exp(δ β_aᵀ z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    pub actions: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub delta: f64,
}

impl Policy for SoftmaxPolicy {
    fn actions(&self) -> &[f64] {
        &self.actions
    }

    fn probs(&self, z: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = self
            .betas
            .iter()
            .map(|b| self.delta * b.iter().zip(z).map(|(u, v)| u * v).sum::<f64>())
            .collect();
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = e.iter().sum();
        e.into_iter().map(|v| v / total).collect()
    }
}

/// Context-free probabilities proportional to `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPolicy {
    pub actions: Vec<f64>,
    probs: Vec<f64>,
}

impl FixedPolicy {
    pub fn new(actions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if actions.len() != weights.len() || actions.is_empty() {
            return Err(invalid("need one nonnegative weight per action"));
        }
        let probs = crate::weights::to_probabilities(&weights)?;
        Ok(Self { actions, probs })
    }
}

impl Policy for FixedPolicy {
    fn actions(&self) -> &[f64] {
        &self.actions
    }

    fn probs(&self, _: &[f64]) -> Vec<f64> {
        self.probs.clone()
    }
}

/// `r(z, a) = p*(a | z) / q*(a | z)`; a zero logged propensity on an observed
/// row is a support violation.
pub fn off_policy_weights<S: AsRef<str>>(
    logged: Arc<dyn Policy>,
    target: Arc<dyn Policy>,
    a: &str,
    z: &[S],
) -> WeightFunction {
    let mut domain = vec![a.to_string()];
    domain.extend(z.iter().map(|c| c.as_ref().to_string()));
    WeightFunction::new(domain, move |row| {
        let q = logged.prob(row[0], &row[1..]);
        if q == 0.0 {
            return f64::INFINITY;
        }
        target.prob(row[0], &row[1..]) / q
    })
}

/// `r = 1` on rows with `k = 1` and `within_k2` on rows with `k = 2`.
pub fn two_sample_shift_weights(k: &str, within_k2: &WeightFunction) -> WeightFunction {
    let mut domain = vec![k.to_string()];
    for c in within_k2.domain() {
        if c != k {
            domain.push(c.clone());
        }
    }
    let inner_idx: Vec<usize> = within_k2
        .domain()
        .iter()
        .map(|c| domain.iter().position(|d| d == c).unwrap())
        .collect();
    let inner = within_k2.clone();
    WeightFunction::try_new(domain, move |row| match row[0] {
        1.0 => Ok(1.0),
        2.0 => {
            let sub: Vec<f64> = inner_idx.iter().map(|&i| row[i]).collect();
            inner.eval_domain(&sub)
        }
        g => Err(invalid(format!("sample indicator must be 1 or 2, got {g}"))),
    })
}
