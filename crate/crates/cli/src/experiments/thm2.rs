//! Resampling `m = n^q` points from the staircase pair. The test
//! `1{max ≤ m}` has level 0.3 on target samples; the shift factor has a
//! finite second moment, yet for `q > 1/2` the resample rejects with
//! probability tending to one.

use anyhow::Result;
use shifttest::densities::StaircasePair;
use shifttest::resampling::{ResamplePlan, Scheme};
use shifttest::RandomStream;

use super::{power_m, Experiment};
use crate::runner::{Grid, Point, Trial};

/// Rejection probability of `1{max ≤ m}` under the target.
pub const TEST_LEVEL: f64 = 0.3;

pub struct Thm2Counterexample;

impl Experiment for Thm2Counterexample {
    fn grid(&self, _: bool) -> Grid {
        Grid::new(&[
            ("n", &[1e3, 1e4, 1e5]),
            ("q", &[0.4, 0.8]),
            ("eps", &[1.7]),
        ])
    }

    fn replications(&self, paper_scale: bool) -> usize {
        if paper_scale {
            500
        } else {
            200
        }
    }

    fn trial(&self, point: &Point, stream: RandomStream) -> Result<Vec<Trial>> {
        let n = point.count("n")?;
        let pair = StaircasePair::for_test_level(TEST_LEVEL, point.get("eps")?)?;
        let mut rng = stream.rng();
        let xs: Vec<f64> = (0..n).map(|_| pair.sample_observed(&mut rng)).collect();
        let w: Vec<f64> = xs.iter().map(|&x| pair.ratio(x)).collect();
        let m = power_m(n, point.get("q")?, 1);
        // the failure holds for every scheme, and DRPL is slow at m ≫ √n
        let sample = ResamplePlan::new(Scheme::NoRepl).draw(&w, m, &mut rng)?;
        let top = sample.indices.iter().map(|&i| xs[i]).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![Trial::new("max_le_m", top <= m as f64, sample.len())])
    }
}
