use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use super::Alternative;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::ols::ols_columns;
use crate::result::TestOutcome;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation test with a Student-t reference on `k - 2` degrees of freedom.
pub fn pearson_corr_test(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestOutcome> {
    let k = x.len();
    if k != y.len() {
        return Err(invalid("pearson test needs samples of equal length"));
    }
    if k < 4 {
        return Err(invalid(format!("pearson test needs at least 4 pairs, got {k}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (k - 2) as f64;
    let t = if r.abs() == 1.0 {
        r * f64::INFINITY
    } else {
        r * df.sqrt() / (1.0 - r * r).sqrt()
    };
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    let p = match alternative {
        Alternative::TwoSided => 2.0 * dist.sf(t.abs()),
        Alternative::Greater => dist.sf(t),
        Alternative::Less => dist.cdf(t),
    };
    Ok(TestOutcome::new(r, p))
}

/// F-test of `H0: slopes = beta0` in `response ~ 1 + covariates`, intercept free.
pub fn regression_slope_gof<S: AsRef<str>>(
    sample: &Dataset,
    response: &str,
    covariates: &[S],
    beta0: &[f64],
) -> Result<TestOutcome> {
    let p = covariates.len();
    if beta0.len() != p {
        return Err(invalid(format!("beta0 has {} entries for {p} covariates", beta0.len())));
    }
    if p == 0 {
        return Err(invalid("regression goodness-of-fit needs at least one covariate"));
    }
    let m = sample.n_rows();
    if m <= p + 1 {
        return Err(invalid(format!("need more than {} rows, got {m}", p + 1)));
    }
    let full = ols_columns(sample, response, covariates)?;
    let y = sample.column(response)?;
    let xs = covariates
        .iter()
        .map(|c| sample.column(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    // restricted model: y - X beta0 = intercept + noise
    let resid: Vec<f64> = (0..m)
        .map(|i| y[i] - xs.iter().zip(beta0).map(|(x, b)| x[i] * b).sum::<f64>())
        .collect();
    let c = mean(&resid);
    let rss_r: f64 = resid.iter().map(|v| (v - c).powi(2)).sum();
    let df2 = (m - p - 1) as f64;
    let num = (rss_r - full.rss).max(0.0) / p as f64;
    let den = full.rss / df2;
    if num == 0.0 {
        return Ok(TestOutcome::new(0.0, 1.0));
    }
    if den == 0.0 {
        return Ok(TestOutcome::new(f64::INFINITY, 0.0));
    }
    let f = num / den;
    let dist = FisherSnedecor::new(p as f64, df2).expect("degrees of freedom are positive");
    Ok(TestOutcome::new(f, dist.sf(f)))
}

/// CDF of a sum of `k` independent standard uniforms.
pub fn irwin_hall_cdf(s: f64, k: u32) -> f64 {
    let kf = k as f64;
    if s <= 0.0 {
        return 0.0;
    }
    if s >= kf {
        return 1.0;
    }
    // symmetric about k/2; evaluate the shorter alternating sum
    if s > kf / 2.0 {
        return 1.0 - irwin_hall_cdf(kf - s, k);
    }
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=(s.floor() as u32) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (s - j as f64).powi(k as i32);
        binom = binom * (kf - j as f64) / (j as f64 + 1.0);
    }
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    (total / fact).clamp(0.0, 1.0)
}

/// `alpha_c`-quantile of the mean of `k` independent uniforms: exact
/// Irwin-Hall inversion for `k <= 12`, normal approximation above.
pub fn bates_quantile(alpha_c: f64, k: usize) -> Result<f64> {
    if !(alpha_c > 0.0 && alpha_c < 1.0) {
        return Err(invalid(format!("quantile level must lie in (0, 1), got {alpha_c}")));
    }
    if k == 0 {
        return Err(invalid("need at least one uniform"));
    }
    if k > 12 {
        let sd = (1.0 / (12.0 * k as f64)).sqrt();
        return Ok(Normal::new(0.5, sd).expect("sd is positive").inverse_cdf(alpha_c));
    }
    let k32 = k as u32;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if irwin_hall_cdf(mid * k as f64, k32) < alpha_c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
