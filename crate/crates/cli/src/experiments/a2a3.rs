//! Conditional independence `X ⊥ Y | Z` in a linear Gaussian model, reduced
//! to marginal independence by replacing `q(z | x)` with `N(0, σ²)`.
//!
//! Sweeping `m_power` probes the `m = o(√n)` requirement, sweeping `sigma`
//! the finite second moment of the weights (which fails for `σ ≥ √6`).

use anyhow::Result;
use shifttest::densities::scm::presets::linear_ci;
use shifttest::densities::GaussianConditional;
use shifttest::engine::ci_reduction_weights;
use shifttest::resampling::{ResamplePlan, Scheme};
use shifttest::target_tests::{HypothesisTest, TestKind};
use shifttest::RandomStream;

use super::{heuristic_m, power_m, resample_tests, Experiment};
use crate::runner::{Grid, Point, Trial};

pub struct AssumptionsA2A3;

impl Experiment for AssumptionsA2A3 {
    fn grid(&self, paper_scale: bool) -> Grid {
        if paper_scale {
            Grid::new(&[
                ("n", &[10_000.0]),
                ("theta", &[0.0, 0.4]),
                ("sigma", &[1.0]),
                ("m_power", &[0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
                ("heuristic", &[0.0]),
            ])
        } else {
            Grid::new(&[
                ("n", &[2000.0]),
                ("theta", &[0.0, 0.4]),
                ("sigma", &[1.0]),
                ("m_power", &[0.5]),
                ("heuristic", &[0.0]),
            ])
        }
    }

    fn replications(&self, paper_scale: bool) -> usize {
        if paper_scale {
            10_000
        } else {
            500
        }
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let data = linear_ci(point.get("theta")?).simulate(n, stream.substream(0))?;
        let conditional = GaussianConditional::new(0.0, vec![1.0], 2.0)?;
        let target = GaussianConditional::marginal(0.0, point.get("sigma")?)?;
        let weights = ci_reduction_weights(&data, Some(&conditional), Some(&target), "z", &["x"])?
            .evaluate(&data)?;
        // the distinct-replacement samplers stall for large m
        let plan = ResamplePlan::new(Scheme::NoRepl);
        let m = if point.flag("heuristic")? {
            heuristic_m(&data, &weights, "z", &["x"], &plan, stream.substream(1))?
        } else {
            power_m(n, point.get("m_power")?, 4)
        };
        let test = HypothesisTest::new(TestKind::PearsonCorr {
            x: "x".into(),
            y: "y".into(),
        });
        resample_tests(&data, &weights, m, &plan, &[("pearson", &test)], &mut stream.rng())
    }
}
