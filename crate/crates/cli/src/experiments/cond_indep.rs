//! `X ⊥ Y | Z` with a bimodal `X` and `Z = -X² + e`, tested by replacing
//! `q(z | x)` with the empirical Gaussian marginal of `Z`.
//!
//! `cortest` and `hsic` use the known conditional; `hsic_fit` estimates it by
//! a quadratic regression on `x`.

use std::sync::Arc;

use anyhow::Result;
use shifttest::densities::scm::presets::mixture_ci;
use shifttest::densities::{fit_gaussian_conditional, GaussianConditional};
use shifttest::engine::{ci_reduction_weights, fit_polynomial_gaussian, ratio_weights, BoundDensity};
use shifttest::resampling::ResamplePlan;
use shifttest::target_tests::{HypothesisTest, TestKind};
use shifttest::RandomStream;

use super::{heuristic_m, resample_tests, Experiment};
use crate::runner::{Grid, Point, Trial};

pub struct CondIndep;

impl Experiment for CondIndep {
    fn grid(&self, _: bool) -> Grid {
        Grid::new(&[
            ("n", &[150.0]),
            ("tau", &[1.0, 2.0]),
            ("theta", &[0.0, 0.5, 1.0, 1.5]),
        ])
    }

    fn replications(&self, _: bool) -> usize {
        500
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let tau = point.count("tau")? as u32;
        let data = mixture_ci(point.get("theta")?, tau)
            .simulate(n, stream.substream(0))?
            .with_column("xsq", |row| row[0] * row[0])?;
        let known = GaussianConditional::new(0.0, vec![-1.0], 2.0)?;
        let w_known = ci_reduction_weights(&data, Some(&known), None, "z", &["xsq"])?.evaluate(&data)?;
        let target = fit_gaussian_conditional::<&str>(&data, "z", &[])?;
        let fitted = fit_polynomial_gaussian(&data, "z", &["x"], 2)?;
        let w_fit = ratio_weights(
            BoundDensity::new(Arc::new(target), "z", &[] as &[&str]),
            BoundDensity::new(Arc::new(fitted), "z", &["x"]),
        )
        .evaluate(&data)?;

        let plan = ResamplePlan::default();
        let gof = ["x", "xsq"];
        let cor = HypothesisTest::new(TestKind::PearsonCorr {
            x: "x".into(),
            y: "y".into(),
        });
        let hsic = HypothesisTest::new(TestKind::HsicPerm {
            x: vec!["x".into()],
            y: vec!["y".into()],
        })
        .with_permutations(200);
        let mut rng = stream.rng();
        let m = heuristic_m(&data, &w_known, "z", &gof, &plan, stream.substream(1))?;
        let mut trials = resample_tests(&data, &w_known, m, &plan, &[("cortest", &cor), ("hsic", &hsic)], &mut rng)?;
        let m_fit = heuristic_m(&data, &w_fit, "z", &gof, &plan, stream.substream(2))?;
        trials.extend(resample_tests(&data, &w_fit, m_fit, &plan, &[("hsic_fit", &hsic)], &mut rng)?);
        Ok(trials)
    }
}
