//! Dormant independence of `x1` and `x4` after intervening on `x3`.
//!
//! The shift factor is `q̂(x3) / q̂(x3 | x2)`, with both densities estimated
//! on the data: linear Gaussian, quadratic Gaussian or empirical frequencies
//! depending on the model. `theta = 0` is the graph without the edge
//! `x1 → x4` (null true); any other value adds it.

use std::sync::Arc;

use anyhow::Result;
use rand::Rng;
use rand_distr::{Dirichlet, Distribution};
use serde_json::json;
use shifttest::densities::fit_gaussian_conditional;
use shifttest::densities::scm::presets::{verma_gaussian, verma_nonlinear};
use shifttest::engine::{
    fit_polynomial_gaussian, ratio_weights, BoundDensity, ConditionalDensity, DiscreteConditional,
};
use shifttest::resampling::ResamplePlan;
use shifttest::target_tests::{HypothesisTest, TestKind};
use shifttest::{Dataset, RandomStream};

use super::{heuristic_m, power_m, resample_tests, Experiment};
use crate::runner::{Grid, Point, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VermaKind {
    Gaussian,
    Nonlinear,
    Binary,
}

/// Seed of the conditional probability tables of the binary model.
pub const TABLE_SEED: u64 = 20_240_504;

/// Conditional probability tables of the binary model; `h` takes four values.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTables {
    pub p_h: [f64; 4],
    pub p1: f64,
    /// Indexed by `(x1, h)`.
    pub p2: [[f64; 4]; 2],
    /// Indexed by `x2`.
    pub p3: [f64; 2],
    /// Indexed by `x3` when the edge is absent.
    pub p4_g: [f64; 2],
    /// Indexed by `(x3, x1)` when the edge is present.
    pub p4_h: [[f64; 2]; 2],
}

impl BinaryTables {
    pub fn draw(stream: RandomStream) -> Self {
        let mut rng = stream.rng();
        let p_h = Dirichlet::new([3.0; 4]).expect("valid concentration").sample(&mut rng);
        // Beta(1, 1) is uniform
        let mut u = || rng.random::<f64>();
        Self {
            p_h,
            p1: u(),
            p2: [[u(), u(), u(), u()], [u(), u(), u(), u()]],
            p3: [u(), u()],
            p4_g: [u(), u()],
            p4_h: [[u(), u()], [u(), u()]],
        }
    }

    pub fn simulate(&self, n: usize, edge: bool, stream: RandomStream) -> Result<Dataset> {
        let mut rng = stream.rng();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u: f64 = rng.random();
            let mut h = 0;
            while h < 3 && u >= self.p_h[h] {
                u -= self.p_h[h];
                h += 1;
            }
            let mut flip = |p: f64| usize::from(rng.random::<f64>() < p);
            let x1 = flip(self.p1);
            let x2 = flip(self.p2[x1][h]);
            let x3 = flip(self.p3[x2]);
            let x4 = if edge { flip(self.p4_h[x3][x1]) } else { flip(self.p4_g[x3]) };
            rows.push([x1, x2, x3, x4].map(|v| v as f64).to_vec());
        }
        Ok(Dataset::from_rows(["x1", "x2", "x3", "x4"].map(String::from).to_vec(), &rows)?)
    }
}

pub struct Verma {
    kind: VermaKind,
    tables: BinaryTables,
}

impl Verma {
    pub fn new(kind: VermaKind) -> Self {
        Self {
            kind,
            tables: BinaryTables::draw(RandomStream::new(TABLE_SEED, 0)),
        }
    }

    /// Data and shift factors for one replication.
    pub fn weighted_data(&self, n: usize, theta: f64, stream: RandomStream) -> Result<(Dataset, Vec<f64>)> {
        let x3 = |d: Arc<dyn ConditionalDensity>| BoundDensity::new(d, "x3", &[] as &[&str]);
        Ok(match self.kind {
            VermaKind::Gaussian => {
                let data = verma_gaussian(theta).simulate(n, stream)?;
                let w = ratio_weights(
                    x3(Arc::new(fit_gaussian_conditional::<&str>(&data, "x3", &[])?)),
                    BoundDensity::new(Arc::new(fit_gaussian_conditional(&data, "x3", &["x2"])?), "x3", &["x2"]),
                )
                .evaluate(&data)?;
                (data, w)
            }
            VermaKind::Nonlinear => {
                let data = verma_nonlinear(theta)
                    .simulate(n, stream)?
                    .with_column("x2sq", |row| row[1] * row[1])?;
                let w = ratio_weights(
                    x3(Arc::new(fit_gaussian_conditional::<&str>(&data, "x3", &[])?)),
                    BoundDensity::new(Arc::new(fit_polynomial_gaussian(&data, "x3", &["x2"], 2)?), "x3", &["x2"]),
                )
                .evaluate(&data)?;
                (data, w)
            }
            VermaKind::Binary => {
                let data = self.tables.simulate(n, theta != 0.0, stream)?;
                let w = ratio_weights(
                    x3(Arc::new(DiscreteConditional::fit::<&str>(&data, "x3", &[])?)),
                    BoundDensity::new(Arc::new(DiscreteConditional::fit(&data, "x3", &["x2"])?), "x3", &["x2"]),
                )
                .evaluate(&data)?;
                (data, w)
            }
        })
    }

    fn test(&self) -> HypothesisTest {
        let (x, y) = ("x1".to_string(), "x4".to_string());
        HypothesisTest::new(match self.kind {
            VermaKind::Binary => TestKind::FisherExact { x, y },
            _ => TestKind::PearsonCorr { x, y },
        })
    }

    /// Covariates of the goodness-of-fit regression for `x3`, whose
    /// dependence on `x2` the shift removes.
    fn gof_covariates(&self) -> &'static [&'static str] {
        match self.kind {
            VermaKind::Nonlinear => &["x2", "x2sq"],
            _ => &["x2"],
        }
    }
}

impl Experiment for Verma {
    fn grid(&self, _: bool) -> Grid {
        Grid::new(&[("n", &[500.0, 1000.0, 2000.0]), ("theta", &[0.0, 0.3])])
    }

    fn replications(&self, _: bool) -> usize {
        500
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let (data, w) = self.weighted_data(n, point.get("theta")?, stream.substream(0))?;
        let plan = ResamplePlan::default();
        let test = self.test();
        let mut rng = stream.rng();
        let mut trials = resample_tests(&data, &w, power_m(n, 0.5, 4), &plan, &[("sqrt", &test)], &mut rng)?;
        let m = heuristic_m(&data, &w, "x3", self.gof_covariates(), &plan, stream.substream(1))?;
        trials.extend(resample_tests(&data, &w, m, &plan, &[("heuristic", &test)], &mut rng)?);
        Ok(trials)
    }

    fn metadata(&self) -> serde_json::Value {
        if self.kind != VermaKind::Binary {
            return serde_json::Value::Null;
        }
        let t = &self.tables;
        json!({
            "table_seed": TABLE_SEED,
            "p_h": t.p_h,
            "p1": t.p1,
            "p2": t.p2,
            "p3": t.p3,
            "p4_g": t.p4_g,
            "p4_h": t.p4_h,
        })
    }
}
