use rand::Rng;

use super::shift::ShiftSpec;
use super::split::SplitPlan;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::resampling::{rejection_sample, IndexSample, ResamplePlan, Scheme};
use crate::result::TestResult;
use crate::rng::RandomStream;
use crate::target_tests::HypothesisTest;
use crate::weights::estimate_second_moment;

fn attach(result: TestResult, sample: &IndexSample, weights: &[f64]) -> Result<TestResult> {
    let mut r = result
        .with_diagnostic("second_moment", estimate_second_moment(weights)?)
        .with_diagnostic("stage", sample.stage.code())
        .with_diagnostic("attempts_repl", sample.attempts.repl as f64)
        .with_diagnostic("attempts_norepl", sample.attempts.norepl as f64)
        .with_diagnostic("approximate", f64::from(u8::from(sample.approximate)))
        .with_diagnostic("n", weights.len() as f64);
    if sample.approximate {
        r.warn("resample drawn by Gibbs refinement; only approximately distinct-replacement distributed");
    }
    Ok(r)
}

/// Draws a resample of size `m` with the given weights and applies `test` to it.
///
/// This is the common core of the pipelines; the same generator feeds both the
/// resampler and any randomized test.
pub fn resample_and_test<R: Rng + ?Sized>(
    data: &Dataset,
    weights: &[f64],
    test: &HypothesisTest,
    m: usize,
    plan: &ResamplePlan,
    alpha: f64,
    rng: &mut R,
) -> Result<TestResult> {
    test.validate()?;
    if weights.len() != data.n_rows() {
        return Err(invalid(format!(
            "{} weights for {} rows",
            weights.len(),
            data.n_rows()
        )));
    }
    if plan.scheme != Scheme::Rejection && m < test.min_sample_size() {
        return Err(invalid(format!(
            "resample size {m} is below the test's minimum of {}",
            test.min_sample_size()
        )));
    }
    let sample = plan.draw(weights, m, rng)?;
    if sample.len() < test.min_sample_size() {
        return Err(invalid(format!(
            "only {} rows kept, the test needs {}",
            sample.len(),
            test.min_sample_size()
        )));
    }
    let rows = data.select_rows(&sample.indices)?;
    let outcome = test.run(&rows, rng)?;
    attach(outcome.decide(alpha, sample.len())?, &sample, weights)
}

/// Evaluates the shift on all rows, resamples `m` of them and tests.
pub fn run_known_shift(
    data: &Dataset,
    shift: &ShiftSpec,
    test: &HypothesisTest,
    m: usize,
    plan: &ResamplePlan,
    alpha: f64,
    stream: RandomStream,
) -> Result<TestResult> {
    if m > data.n_rows() {
        return Err(invalid(format!("m = {m} exceeds n = {}", data.n_rows())));
    }
    let weights = shift.weights(data)?;
    resample_and_test(data, &weights, test, m, plan, alpha, &mut stream.rng())
}

/// Fits the shift on the first `n1` rows and resamples from the remaining `n2`.
#[allow(clippy::too_many_arguments)]
pub fn run_estimated_shift(
    data: &Dataset,
    shift: &ShiftSpec,
    test: &HypothesisTest,
    m: usize,
    plan: &ResamplePlan,
    a: f64,
    alpha: f64,
    stream: RandomStream,
) -> Result<TestResult> {
    if !shift.is_estimated() {
        return Err(invalid("run_estimated_shift needs an estimated shift"));
    }
    let split = SplitPlan::new(data.n_rows(), a)?;
    if split.n2 < m {
        return Err(invalid(format!(
            "testing split has {} rows, fewer than m = {m}",
            split.n2
        )));
    }
    let first = data.slice_rows(0..split.n1)?;
    let second = data.slice_rows(split.n1..data.n_rows())?;
    let weights = shift.weight_function(&first)?.evaluate(&second)?;
    let r = resample_and_test(&second, &weights, test, m, plan, alpha, &mut stream.rng())?;
    Ok(r.with_diagnostic("n1", split.n1 as f64)
        .with_diagnostic("n2", split.n2 as f64))
}

/// Keeps each row with probability `r/M` and tests all kept rows.
pub fn run_rejection_test(
    data: &Dataset,
    shift: &ShiftSpec,
    bound: f64,
    test: &HypothesisTest,
    alpha: f64,
    stream: RandomStream,
) -> Result<TestResult> {
    test.validate()?;
    let weights = shift.weights(data)?;
    let mut rng = stream.rng();
    let sample = rejection_sample(&weights, bound, &mut rng)?;
    if sample.len() < test.min_sample_size() {
        return Err(Error::TooFewPositiveWeights {
            needed: test.min_sample_size(),
            available: sample.len(),
        });
    }
    let rows = data.select_rows(&sample.indices)?;
    let outcome = test.run(&rows, &mut rng)?;
    let r = attach(outcome.decide(alpha, sample.len())?, &sample, &weights)?;
    Ok(r.with_diagnostic("kept_fraction", sample.len() as f64 / data.n_rows() as f64))
}
