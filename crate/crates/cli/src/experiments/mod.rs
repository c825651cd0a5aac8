//! Simulation studies, each a grid of parameters and a single-replication
//! routine returning one [`Trial`] per compared method.

mod a2a3;
mod cond_indep;
mod ipw;
mod off_policy;
mod thm2;
mod verma;

use std::sync::Arc;

use anyhow::Result;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use shifttest::engine::{choose_m_heuristic, HeuristicConfig, RegressionGof};
use shifttest::resampling::ResamplePlan;
use shifttest::target_tests::HypothesisTest;
use shifttest::rng::StreamRng;
use shifttest::{Dataset, RandomStream};

use crate::runner::{sweep, Grid, Point, Report, Trial};

pub use a2a3::AssumptionsA2A3;
pub use cond_indep::CondIndep;
pub use ipw::IpwCompare;
pub use off_policy::OffPolicy;
pub use thm2::Thm2Counterexample;
pub use verma::{Verma, VermaKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentName {
    #[serde(rename = "assumptions_a2_a3")]
    #[value(name = "assumptions_a2_a3")]
    AssumptionsA2A3,
    OffPolicy,
    CondIndep,
    VermaGaussian,
    VermaBinary,
    VermaNonlinear,
    IpwCompare,
    Thm2Counterexample,
}

impl ExperimentName {
    pub fn build(self) -> Box<dyn Experiment> {
        match self {
            Self::AssumptionsA2A3 => Box::new(AssumptionsA2A3),
            Self::OffPolicy => Box::new(OffPolicy::new()),
            Self::CondIndep => Box::new(CondIndep),
            Self::VermaGaussian => Box::new(Verma::new(VermaKind::Gaussian)),
            Self::VermaBinary => Box::new(Verma::new(VermaKind::Binary)),
            Self::VermaNonlinear => Box::new(Verma::new(VermaKind::Nonlinear)),
            Self::IpwCompare => Box::new(IpwCompare),
            Self::Thm2Counterexample => Box::new(Thm2Counterexample),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AssumptionsA2A3 => "assumptions_a2_a3",
            Self::OffPolicy => "off_policy",
            Self::CondIndep => "cond_indep",
            Self::VermaGaussian => "verma_gaussian",
            Self::VermaBinary => "verma_binary",
            Self::VermaNonlinear => "verma_nonlinear",
            Self::IpwCompare => "ipw_compare",
            Self::Thm2Counterexample => "thm2_counterexample",
        }
    }
}

pub trait Experiment: Sync {
    /// Default sweep; `paper_scale` selects the full-size study.
    fn grid(&self, paper_scale: bool) -> Grid;

    fn replications(&self, paper_scale: bool) -> usize;

    /// One independent replication at `point`.
    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>>;

    /// Fixed model parameters worth recording next to the results.
    fn metadata(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

/// A fully specified experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// Overrides of the default grid axes.
    #[serde(default)]
    pub grid: Vec<(String, Vec<f64>)>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paper_scale: bool,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName) -> Self {
        Self {
            name,
            grid: Vec::new(),
            replications: None,
            seed: 0,
            paper_scale: false,
        }
    }

    pub fn with_axis(mut self, name: &str, values: &[f64]) -> Self {
        self.grid.push((name.to_string(), values.to_vec()));
        self
    }

    pub fn with_replications(mut self, r: usize) -> Self {
        self.replications = Some(r);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn run(&self, threads: usize) -> Result<Report> {
        let exp = self.name.build();
        let mut grid = exp.grid(self.paper_scale);
        for (axis, values) in &self.grid {
            grid.set(axis, values.clone())?;
        }
        let reps = self.replications.unwrap_or_else(|| exp.replications(self.paper_scale));
        let mut report = sweep(self.name.as_str(), &grid, reps, self.seed, threads, |p, s| {
            exp.trial(p, s)
        })?;
        report.metadata = exp.metadata();
        Ok(report)
    }
}

/// `⌊n^power⌋`, at least `floor`.
pub(crate) fn power_m(n: usize, power: f64, floor: usize) -> usize {
    ((n as f64).powf(power).floor() as usize).max(floor).min(n)
}

/// Target heuristic with a zero-slope regression check of `response` on `covariates`.
pub(crate) fn heuristic_m(
    data: &Dataset,
    weights: &[f64],
    response: &str,
    covariates: &[&str],
    plan: &ResamplePlan,
    stream: RandomStream,
) -> Result<usize> {
    let gof = RegressionGof::new(response, covariates, vec![0.0; covariates.len()]);
    let cfg = HeuristicConfig::new(Arc::new(gof));
    Ok(choose_m_heuristic(data, weights, &cfg, plan, stream)?.m)
}

/// Resamples once and applies each test to the same rows.
pub(crate) fn resample_tests(
    data: &Dataset,
    weights: &[f64],
    m: usize,
    plan: &ResamplePlan,
    tests: &[(&str, &HypothesisTest)],
    rng: &mut StreamRng,
) -> Result<Vec<Trial>> {
    let sample = plan.draw(weights, m, rng)?;
    let rows = data.select_rows(&sample.indices)?;
    tests
        .iter()
        .map(|(name, t)| {
            let out = t.run(&rows, rng)?;
            Ok(Trial::new(name, out.p_value <= ALPHA, sample.len()))
        })
        .collect()
}

/// Level of every test in the bundled experiments.
pub const ALPHA: f64 = 0.05;
