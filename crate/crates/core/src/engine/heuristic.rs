use std::fmt::Debug;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::resampling::ResamplePlan;
use crate::rng::RandomStream;
use crate::target_tests::{bates_quantile, regression_slope_gof};

/// Conditional goodness-of-fit test `κ` applied to a resample; returns a p-value.
pub trait GofTest: Send + Sync + Debug {
    fn p_value(&self, sample: &Dataset, rng: &mut dyn RngCore) -> Result<f64>;
}

/// F-test that regressing `response` on `covariates` gives slopes `coefficients`
/// (intercept free).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionGof {
    pub response: String,
    pub covariates: Vec<String>,
    pub coefficients: Vec<f64>,
}

impl RegressionGof {
    pub fn new<S: AsRef<str>>(response: &str, covariates: &[S], coefficients: Vec<f64>) -> Self {
        Self {
            response: response.to_string(),
            covariates: covariates.iter().map(|c| c.as_ref().to_string()).collect(),
            coefficients,
        }
    }
}

impl GofTest for RegressionGof {
    fn p_value(&self, sample: &Dataset, _: &mut dyn RngCore) -> Result<f64> {
        Ok(regression_slope_gof(sample, &self.response, &self.covariates, &self.coefficients)?.p_value)
    }
}

/// A degenerate test that always reports the same p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantGof(pub f64);

impl GofTest for ConstantGof {
    fn p_value(&self, _: &Dataset, _: &mut dyn RngCore) -> Result<f64> {
        Ok(self.0)
    }
}

/// Serialized choice of `κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GofSpec {
    Regression(RegressionGof),
}

impl GofSpec {
    pub fn build(&self) -> Arc<dyn GofTest> {
        match self {
            Self::Regression(r) => Arc::new(r.clone()),
        }
    }
}

fn default_alpha_c() -> f64 {
    0.05
}

fn default_repetitions() -> usize {
    10
}

#[derive(Debug, Clone)]
pub struct HeuristicConfig {
    pub alpha_c: f64,
    /// Initial size; `⌈√n⌉/2` when unset.
    pub m0: Option<usize>,
    /// Increment; `⌈√n⌉/10` when unset.
    pub delta: Option<usize>,
    pub repetitions: usize,
    pub gof: Arc<dyn GofTest>,
    /// Choose `m` on the first half of the rows and test on the second.
    pub strict_split: bool,
}

impl HeuristicConfig {
    pub fn new(gof: Arc<dyn GofTest>) -> Self {
        Self {
            alpha_c: default_alpha_c(),
            m0: None,
            delta: None,
            repetitions: default_repetitions(),
            gof,
            strict_split: false,
        }
    }

    /// Effective `(m0, Δ)` for `n` rows.
    pub fn schedule(&self, n: usize) -> Result<(usize, usize)> {
        let root = (n as f64).sqrt().ceil() as usize;
        let m0 = self.m0.unwrap_or((root / 2).max(2));
        let delta = self.delta.unwrap_or((root / 10).max(1));
        if m0 < 2 || delta < 1 {
            return Err(invalid(format!("need m0 ≥ 2 and Δ ≥ 1, got m0 = {m0}, Δ = {delta}")));
        }
        Ok((m0, delta))
    }
}

/// Serialized form of [`HeuristicConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicSpec {
    #[serde(default = "default_alpha_c")]
    pub alpha_c: f64,
    #[serde(default)]
    pub m0: Option<usize>,
    #[serde(default)]
    pub delta: Option<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub gof: GofSpec,
    #[serde(default)]
    pub strict_split: bool,
}

impl From<&HeuristicSpec> for HeuristicConfig {
    fn from(s: &HeuristicSpec) -> Self {
        Self {
            alpha_c: s.alpha_c,
            m0: s.m0,
            delta: s.delta,
            repetitions: s.repetitions,
            gof: s.gof.build(),
            strict_split: s.strict_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicChoice {
    pub m: usize,
    /// The scan reached the largest admissible size without failing.
    pub capped: bool,
    /// `(m, mean p-value)` for every size examined.
    pub trace: Vec<(usize, f64)>,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

/// Increases `m` from `m0` in steps of `Δ` while the mean of `K` goodness-of-fit
/// p-values stays above the `α_c`-quantile of a mean of `K` uniforms.
///
/// Returns the last accepted size. A failure at `m0` itself returns `m0 − Δ`,
/// or `m0` with a warning when that would drop below one. The scan never
/// exceeds the number of positively weighted rows.
pub fn choose_m_heuristic(
    data: &Dataset,
    weights: &[f64],
    cfg: &HeuristicConfig,
    plan: &ResamplePlan,
    stream: RandomStream,
) -> Result<HeuristicChoice> {
    let n = data.n_rows();
    if weights.len() != n {
        return Err(invalid(format!("{} weights for {n} rows", weights.len())));
    }
    if cfg.repetitions == 0 {
        return Err(invalid("the heuristic needs at least one repetition"));
    }
    let (m0, delta) = cfg.schedule(n)?;
    let cap = weights.iter().filter(|&&w| w > 0.0).count().min(n);
    if cap < 2 {
        return Err(invalid("fewer than two positively weighted rows"));
    }
    let threshold = bates_quantile(cfg.alpha_c, cfg.repetitions)?;
    let mut rng = stream.rng();
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let start = m0.min(cap);
    if start < m0 {
        warnings.push(format!("m0 = {m0} exceeds the {cap} positively weighted rows"));
    }
    let mut m = start;
    let mut accepted: Option<usize> = None;
    loop {
        let mut total = 0.0;
        for _ in 0..cfg.repetitions {
            let sample = plan.draw(weights, m, &mut rng)?;
            let rows = data.select_rows(&sample.indices)?;
            total += cfg.gof.p_value(&rows, &mut rng)?;
        }
        let mean = total / cfg.repetitions as f64;
        trace.push((m, mean));
        if mean > threshold {
            accepted = Some(m);
            if m >= cap {
                return Ok(HeuristicChoice {
                    m: cap,
                    capped: true,
                    trace,
                    threshold,
                    warnings,
                });
            }
            m = (m + delta).min(cap);
            continue;
        }
        let m = match accepted {
            Some(prev) => prev,
            None if start > delta => start - delta,
            None => {
                warnings.push(format!(
                    "goodness-of-fit failed at the initial size {start}; m0 − Δ < 1, returning m0"
                ));
                start
            }
        };
        return Ok(HeuristicChoice {
            m,
            capped: false,
            trace,
            threshold,
            warnings,
        });
    }
}
