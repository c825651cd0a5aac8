//! Contextual bandit with a uniform logging policy over four actions.
//!
//! `variant` selects the hypothesis: 1 tests `E[R] ≤ 0` under the softmax
//! policy of strength `delta`; 2 compares rewards under the logging and the
//! softmax policy; 3 compares them under a policy that favours the first
//! action with odds `exp(delta)`, which changes the spread but not the mean.

use std::sync::Arc;

use anyhow::{bail, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use shifttest::engine::{
    off_policy_weights, two_sample_shift_weights, FixedPolicy, Policy, SoftmaxPolicy,
    UniformPolicy,
};
use shifttest::resampling::{ResamplePlan, Scheme};
use shifttest::target_tests::{Alternative, HypothesisTest, TestKind};
use shifttest::{Dataset, RandomStream};

use super::{power_m, resample_tests, Experiment};
use crate::runner::{Grid, Point, Trial};

const ACTIONS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
const CONTEXT: [&str; 3] = ["z1", "z2", "z3"];
/// Seed of the reward coefficients.
pub const BETA_SEED: u64 = 20_240_501;

pub struct OffPolicy {
    betas: Vec<Vec<f64>>,
}

impl OffPolicy {
    pub fn new() -> Self {
        let mut rng = RandomStream::new(BETA_SEED, 0).rng();
        let betas = ACTIONS
            .iter()
            .map(|_| (0..CONTEXT.len()).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        Self { betas }
    }

    pub fn betas(&self) -> &[Vec<f64>] {
        &self.betas
    }

    /// `(z1, z2, z3, a, r, k)` with uniformly logged actions; `k` alternates
    /// between 1 and 2 to split the sample in halves.
    pub fn simulate(&self, n: usize, stream: RandomStream) -> Result<Dataset> {
        let mut rng = stream.rng();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let z: Vec<f64> = (0..CONTEXT.len()).map(|_| rng.sample(StandardNormal)).collect();
            let a = rng.random_range(0..ACTIONS.len());
            let noise: f64 = rng.sample(StandardNormal);
            let r = self.betas[a].iter().zip(&z).map(|(b, v)| b * v).sum::<f64>() + noise;
            rows.push(vec![z[0], z[1], z[2], ACTIONS[a], r, (1 + i % 2) as f64]);
        }
        let names = ["z1", "z2", "z3", "a", "r", "k"].map(String::from).to_vec();
        Ok(Dataset::from_rows(names, &rows)?)
    }

    fn softmax(&self, delta: f64) -> Arc<dyn Policy> {
        Arc::new(SoftmaxPolicy {
            actions: ACTIONS.to_vec(),
            betas: self.betas.clone(),
            delta,
        })
    }
}

impl Default for OffPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl Experiment for OffPolicy {
    fn grid(&self, paper_scale: bool) -> Grid {
        let n: &[f64] = if paper_scale { &[30_000.0] } else { &[5000.0] };
        Grid::new(&[
            ("n", n),
            ("variant", &[1.0, 2.0, 3.0]),
            ("delta", &[0.0, 0.5, 1.0, 2.0, 4.0]),
        ])
    }

    fn replications(&self, _: bool) -> usize {
        500
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let delta = point.get("delta")?;
        let data = self.simulate(n, stream.substream(0))?;
        let logged: Arc<dyn Policy> = Arc::new(UniformPolicy {
            actions: ACTIONS.to_vec(),
        });
        let m = power_m(n, 0.5, 4);
        let plan = ResamplePlan::new(Scheme::Drpl);
        let mut rng = stream.rng();
        match point.count("variant")? {
            1 => {
                let w = off_policy_weights(logged, self.softmax(delta), "a", &CONTEXT)
                    .evaluate(&data)?;
                let test = HypothesisTest::new(TestKind::WilcoxonSignedRank {
                    x: "r".into(),
                    mu0: 0.0,
                })
                .with_alternative(Alternative::Greater);
                resample_tests(&data, &w, m, &plan, &[("wilcoxon", &test)], &mut rng)
            }
            v @ (2 | 3) => {
                let target: Arc<dyn Policy> = if v == 2 {
                    self.softmax(delta)
                } else {
                    Arc::new(FixedPolicy::new(ACTIONS.to_vec(), vec![delta.exp(), 1.0, 1.0, 1.0])?)
                };
                let inner = off_policy_weights(logged, target, "a", &CONTEXT);
                let w = two_sample_shift_weights("k", &inner).evaluate(&data)?;
                let mw = HypothesisTest::new(TestKind::MannWhitneyU {
                    value: "r".into(),
                    group: "k".into(),
                });
                let mmd = HypothesisTest::new(TestKind::MmdPerm {
                    columns: vec!["r".into()],
                    group: "k".into(),
                })
                .with_permutations(200);
                resample_tests(&data, &w, m, &plan, &[("mann_whitney", &mw), ("mmd", &mmd)], &mut rng)
            }
            v => bail!("variant must be 1, 2 or 3, got {v}"),
        }
    }

    fn metadata(&self) -> serde_json::Value {
        json!({ "beta_seed": BETA_SEED, "betas": self.betas })
    }
}
