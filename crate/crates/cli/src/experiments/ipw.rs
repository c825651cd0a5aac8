//! `E_P[X3] = 0` after the intervention `do(X2 := μ + e)` in a Gaussian chain,
//! which holds only at `μ = 1`. Plain and clipped IPW against resampling
//! with the target heuristic and a Wilcoxon test.

use std::sync::Arc;

use anyhow::Result;
use shifttest::densities::scm::presets::ipw_chain;
use shifttest::densities::GaussianConditional;
use shifttest::engine::{ipw_mean_test, ratio_weights, BoundDensity};
use shifttest::resampling::ResamplePlan;
use shifttest::target_tests::{HypothesisTest, TestKind};
use shifttest::RandomStream;

use super::{heuristic_m, resample_tests, Experiment, ALPHA};
use crate::runner::{Grid, Point, Trial};

/// Number of largest weights truncated by the clipped estimator.
pub const CLIP_K: usize = 10;

pub struct IpwCompare;

impl Experiment for IpwCompare {
    fn grid(&self, _: bool) -> Grid {
        Grid::new(&[("n", &[100.0]), ("mu", &[1.0, 2.0, 4.0, 8.0])])
    }

    fn replications(&self, _: bool) -> usize {
        500
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let data = ipw_chain().simulate(n, stream.substream(0))?;
        let target = GaussianConditional::marginal(point.get("mu")?, 1.0)?;
        let observed = GaussianConditional::new(0.0, vec![1.0], 2.0)?;
        let w = ratio_weights(
            BoundDensity::new(Arc::new(target), "x2", &[] as &[&str]),
            BoundDensity::new(Arc::new(observed), "x2", &["x1"]),
        )
        .evaluate(&data)?;

        let plain = ipw_mean_test(&data, &w, "x3", 0.0, ALPHA, None)?;
        let clipped = ipw_mean_test(&data, &w, "x3", 0.0, ALPHA, Some(CLIP_K))?;
        let mut trials = vec![
            Trial::new("ipw", plain.reject, n),
            Trial::new("ipw_clipped", clipped.reject, n),
        ];
        let plan = ResamplePlan::default();
        let m = heuristic_m(&data, &w, "x2", &["x1"], &plan, stream.substream(1))?;
        let test = HypothesisTest::new(TestKind::WilcoxonSignedRank {
            x: "x3".into(),
            mu0: 0.0,
        });
        trials.extend(resample_tests(&data, &w, m, &plan, &[("resampling", &test)], &mut stream.rng())?);
        Ok(trials)
    }
}
