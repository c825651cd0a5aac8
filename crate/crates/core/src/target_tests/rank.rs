use statrs::distribution::{ContinuousCDF, Normal};

use super::Alternative;
use crate::error::{invalid, Result};
use crate::result::TestOutcome;

/// Largest number of nonzero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 20;
/// Largest pooled size handled by exact enumeration.
pub const MANN_WHITNEY_EXACT_MAX: usize = 12;

/// Average ranks (1-based) and the tie term `Σ (t³ - t)`.
pub(crate) fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Normal-approximation p-value for a statistic with the given null mean and
/// variance, with a half-unit continuity correction.
fn normal_p(stat: f64, mean: f64, var: f64, alternative: Alternative) -> f64 {
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let n = standard_normal();
    let d = stat - mean;
    match alternative {
        Alternative::Greater => n.sf((d - 0.5) / sd),
        Alternative::Less => n.cdf((d + 0.5) / sd),
        Alternative::TwoSided => {
            let z = (d.abs() - 0.5).max(0.0) / sd;
            (2.0 * n.sf(z)).min(1.0)
        }
    }
}

/// p-value from an exact null law on integer support `0..=max` (probabilities
/// `pmf`) at the observed integer statistic.
fn exact_p(pmf: &[f64], obs: usize, alternative: Alternative) -> f64 {
    let lower: f64 = pmf[..=obs].iter().sum();
    let upper: f64 = pmf[obs..].iter().sum();
    match alternative {
        Alternative::Greater => upper.min(1.0),
        Alternative::Less => lower.min(1.0),
        Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
    }
}

/// Wilcoxon signed-rank test of symmetry about `mu0`; exact differences are
/// dropped. The statistic is the positive rank sum `W+`.
pub fn wilcoxon_signed_rank(x: &[f64], mu0: f64, alternative: Alternative) -> Result<TestOutcome> {
    let d: Vec<f64> = x.iter().map(|v| v - mu0).filter(|v| *v != 0.0).collect();
    let k = d.len();
    if k == 0 {
        return Err(invalid("all differences from mu0 are zero"));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    if k <= WILCOXON_EXACT_MAX {
        // doubled ranks are integers even with ties
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let scale = 0.5f64.powi(k as i32);
        let pmf: Vec<f64> = counts.iter().map(|c| c * scale).collect();
        let obs = (2.0 * w).round() as usize;
        return Ok(TestOutcome::new(w, exact_p(&pmf, obs, alternative)));
    }
    let kf = k as f64;
    let mean = kf * (kf + 1.0) / 4.0;
    let var = kf * (kf + 1.0) * (2.0 * kf + 1.0) / 24.0 - ties / 48.0;
    Ok(TestOutcome::new(w, normal_p(w, mean, var, alternative)))
}

/// Mann-Whitney U test. The statistic is `U_x`; `Less` means `x` tends to be
/// smaller than `y`.
pub fn mann_whitney_u(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestOutcome> {
    let (kx, ky) = (x.len(), y.len());
    if kx == 0 || ky == 0 {
        return Err(invalid("Mann-Whitney test needs two nonempty samples"));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let rx: f64 = ranks[..kx].iter().sum();
    let offset = (kx * (kx + 1)) as f64 / 2.0;
    let u = rx - offset;
    let n = kx + ky;
    if n <= MANN_WHITNEY_EXACT_MAX {
        // permutation law of the doubled rank sum over all C(n, kx) label sets
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != kx {
                continue;
            }
            let s: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
            counts[s] += 1.0;
            total += 1.0;
        }
        let pmf: Vec<f64> = counts.iter().map(|c| c / total).collect();
        let obs = (2.0 * rx).round() as usize;
        return Ok(TestOutcome::new(u, exact_p(&pmf, obs, alternative)));
    }
    let (fx, fy, nf) = (kx as f64, ky as f64, n as f64);
    let mean = fx * fy / 2.0;
    let var = fx * fy / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    Ok(TestOutcome::new(u, normal_p(u, mean, var, alternative)))
}
