use statrs::function::factorial::ln_factorial;

use super::Alternative;
use crate::result::TestOutcome;

/// Slack on the two-sided "at most as probable" comparison, relative.
const TWO_SIDED_REL_TOL: f64 = 1e-7;

/// Fisher's exact test on `[[a, b], [c, d]]`, conditioning on both margins.
///
/// The statistic is the sample odds ratio `ad / bc` (possibly infinite, NaN
/// when undefined). `greater` tests for an odds ratio above one.
pub fn fisher_exact_2x2(table: [[u64; 2]; 2], alternative: Alternative) -> TestOutcome {
    let [[a, b], [c, d]] = table;
    let odds = (a as f64 * d as f64) / (b as f64 * c as f64);
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return TestOutcome::new(odds, 1.0);
    }
    let n = r1 + r2;
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let fixed = ln_factorial(r1) + ln_factorial(r2) + ln_factorial(c1) + ln_factorial(c2)
        - ln_factorial(n);
    let ln_p = |x: u64| {
        fixed
            - ln_factorial(x)
            - ln_factorial(r1 - x)
            - ln_factorial(c1 - x)
            - ln_factorial(r2 + x - c1)
    };
    let probs: Vec<f64> = (lo..=hi).map(|x| ln_p(x).exp()).collect();
    let at = |x: u64| probs[(x - lo) as usize];
    let p = match alternative {
        Alternative::Greater => (a..=hi).map(at).sum::<f64>(),
        Alternative::Less => (lo..=a).map(at).sum::<f64>(),
        Alternative::TwoSided => {
            let cut = at(a) * (1.0 + TWO_SIDED_REL_TOL);
            probs.iter().filter(|&&q| q <= cut).sum::<f64>()
        }
    };
    TestOutcome::new(odds, p)
}
