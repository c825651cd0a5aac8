use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::heuristic::{choose_m_heuristic, HeuristicConfig, HeuristicSpec};
use super::pipeline::{resample_and_test, run_estimated_shift, run_rejection_test};
use super::shift::ShiftSpec;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::level_bounds::max_m_for_level;
use crate::resampling::{ResamplePlan, Scheme};
use crate::result::TestResult;
use crate::rng::RandomStream;
use crate::target_tests::HypothesisTest;
use crate::weights::estimate_second_moment;

/// How the resample size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MChoice {
    Fixed(usize),
    /// `⌊√n⌋`
    Sqrt,
    /// The target heuristic.
    Heuristic,
    /// The largest `m` whose finite-sample level bound stays below `alpha_psi`.
    FiniteBound,
}

impl Serialize for MChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(m) => s.serialize_u64(*m as u64),
            Self::Sqrt => s.serialize_str("sqrt"),
            Self::Heuristic => s.serialize_str("heuristic"),
            Self::FiniteBound => s.serialize_str("finite-bound"),
        }
    }
}

impl<'de> Deserialize<'de> for MChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(Self::Fixed(m)),
            Raw::Name(s) => match s.as_str() {
                "sqrt" => Ok(Self::Sqrt),
                "heuristic" => Ok(Self::Heuristic),
                "finite-bound" => Ok(Self::FiniteBound),
                other => Err(serde::de::Error::custom(format!(
                    "m must be a count, \"sqrt\", \"heuristic\" or \"finite-bound\", got \"{other}\""
                ))),
            },
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

/// A complete single-test run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path of the CSV data set; resolved by the caller.
    #[serde(default)]
    pub data: Option<String>,
    pub shift: ShiftSpec,
    pub test: HypothesisTest,
    pub m: MChoice,
    #[serde(default)]
    pub plan: ResamplePlan,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Target level of the resampling test for `m = "finite-bound"`; `2·alpha` by default.
    #[serde(default)]
    pub alpha_psi: Option<f64>,
    #[serde(default)]
    pub heuristic: Option<HeuristicSpec>,
    /// With an estimated shift, fit on a first split of size `n1` (`n1^a = √n2`)
    /// instead of the full sample.
    #[serde(default)]
    pub split_exponent: Option<f64>,
}

impl RunConfig {
    /// Runs the configured pipeline on `data`.
    pub fn execute(&self, data: &Dataset) -> Result<TestResult> {
        let stream = RandomStream::new(self.seed, 0);
        if self.plan.scheme == Scheme::Rejection {
            let bound = self
                .plan
                .bound
                .ok_or_else(|| invalid("plan.bound is required by the rejection scheme"))?;
            return run_rejection_test(data, &self.shift, bound, &self.test, self.alpha, stream);
        }
        if let (Some(a), true) = (self.split_exponent, self.shift.is_estimated()) {
            let m = match self.m {
                MChoice::Fixed(m) => m,
                MChoice::Sqrt => (data.n_rows() as f64).sqrt() as usize,
                _ => return Err(invalid("with split_exponent, m must be a count or \"sqrt\"")),
            };
            return run_estimated_shift(data, &self.shift, &self.test, m, &self.plan, a, self.alpha, stream);
        }

        let n = data.n_rows();
        let mut warnings = Vec::new();
        let (tune, test_rows) = match (&self.heuristic, self.m) {
            (Some(h), MChoice::Heuristic) if h.strict_split => {
                let half = n / 2;
                (data.slice_rows(0..half)?, data.slice_rows(half..n)?)
            }
            _ => (data.clone(), data.clone()),
        };
        let weights = self.shift.weights(&test_rows)?;
        let m = match self.m {
            MChoice::Fixed(m) => m,
            MChoice::Sqrt => (test_rows.n_rows() as f64).sqrt() as usize,
            MChoice::FiniteBound => {
                let k = estimate_second_moment(&weights)?;
                let alpha_psi = self.alpha_psi.unwrap_or(2.0 * self.alpha);
                max_m_for_level(test_rows.n_rows(), k, self.alpha, alpha_psi)?
                    .m
                    .ok_or_else(|| {
                        invalid(format!(
                            "no resample size keeps the level bound below alpha_psi = {alpha_psi}"
                        ))
                    })?
            }
            MChoice::Heuristic => {
                let spec = self
                    .heuristic
                    .as_ref()
                    .ok_or_else(|| invalid("m = \"heuristic\" needs a heuristic section"))?;
                let cfg = HeuristicConfig::from(spec);
                let tune_weights = if spec.strict_split {
                    self.shift.weights(&tune)?
                } else {
                    weights.clone()
                };
                let choice = choose_m_heuristic(&tune, &tune_weights, &cfg, &self.plan, stream.substream(1))?;
                warnings.extend(choice.warnings);
                choice.m.min(test_rows.n_rows())
            }
        };
        if m == 0 {
            return Err(Error::InvalidArgument("resample size resolved to 0".into()));
        }
        let mut result = resample_and_test(
            &test_rows,
            &weights,
            &self.test,
            m,
            &self.plan,
            self.alpha,
            &mut stream.rng(),
        )?;
        for w in warnings {
            result.warn(w);
        }
        Ok(result)
    }
}
