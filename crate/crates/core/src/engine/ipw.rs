use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::expr::Expr;
use crate::result::TestResult;
use crate::weights::normalize_weights;

/// Values of `f` on every row: a column name, or an arithmetic expression over columns.
pub fn evaluate_function(data: &Dataset, f: &str) -> Result<Vec<f64>> {
    if let Ok(col) = data.column(f) {
        return Ok(col);
    }
    let expr = Expr::parse(f)?;
    let idx = expr.bind(data.columns())?;
    let mut buf = vec![0.0; idx.len()];
    Ok(data
        .rows()
        .map(|row| {
            for (b, &j) in buf.iter_mut().zip(&idx) {
                *b = row[j];
            }
            expr.eval(&buf)
        })
        .collect())
}

/// Replaces the `k` largest weights by the `k`-th largest.
pub fn clip_largest(weights: &[f64], k: usize) -> Vec<f64> {
    if k == 0 || k > weights.len() {
        return weights.to_vec();
    }
    let mut sorted = weights.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let cap = sorted[k - 1];
    weights.iter().map(|&w| w.min(cap)).collect()
}

/// Two-sided Wald test of `E_P[f] = c0` from the weighted mean `T = mean(r̄ f)`
/// with standard error `sd(r̄ f)/√n`.
pub fn ipw_mean_test(
    data: &Dataset,
    weights: &[f64],
    f: &str,
    c0: f64,
    alpha: f64,
    clip_k: Option<usize>,
) -> Result<TestResult> {
    let n = data.n_rows();
    if weights.len() != n {
        return Err(invalid(format!("{} weights for {n} rows", weights.len())));
    }
    if n < 2 {
        return Err(invalid("IPW needs at least two rows"));
    }
    let raw = match clip_k {
        Some(k) => clip_largest(weights, k),
        None => weights.to_vec(),
    };
    let w = normalize_weights(&raw)?;
    let values = evaluate_function(data, f)?;
    let terms: Vec<f64> = w.iter().zip(&values).map(|(a, b)| a * b).collect();
    let t = terms.iter().sum::<f64>() / n as f64;
    let var = terms.iter().map(|v| (v - t).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let p = if se > 0.0 {
        let z = (t - c0).abs() / se;
        2.0 * Normal::standard().sf(z)
    } else if t == c0 {
        1.0
    } else {
        0.0
    };
    Ok(TestResult::new(t, p, alpha, n)?.with_diagnostic("std_error", se))
}
