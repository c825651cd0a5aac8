use rand::seq::SliceRandom;
use rand::Rng;

use super::permutation::{check_permutations, permutation_p};
use crate::error::{invalid, Result};
use crate::result::TestOutcome;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum()
}

/// Median of the nonzero pairwise Euclidean distances, or 1 if all vanish.
pub fn median_heuristic(points: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let s = sq_dist(&points[i], &points[j]);
            if s > 0.0 {
                d.push(s.sqrt());
            }
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_unstable_by(|a, b| a.total_cmp(b));
    let k = d.len();
    if k % 2 == 1 {
        d[k / 2]
    } else {
        0.5 * (d[k / 2 - 1] + d[k / 2])
    }
}

/// Gaussian kernel matrix `exp(-‖u-v‖²/(2h²))` with median-heuristic `h`, row-major.
pub fn gaussian_gram(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let h = median_heuristic(points);
    let scale = 1.0 / (2.0 * h * h);
    let mut k = vec![1.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-sq_dist(&points[i], &points[j]) * scale).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map_or(0, |p| p.len());
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(invalid("points must share a positive dimension"));
    }
    Ok(d)
}

/// Biased MMD² for the split `labels[i] == true` (first sample) vs the rest.
fn mmd2(k: &[f64], n: usize, first: &[bool], kx: usize) -> f64 {
    let ky = n - kx;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let row = &k[i * n..(i + 1) * n];
        for j in 0..n {
            match (first[i], first[j]) {
                (true, true) => sxx += row[j],
                (false, false) => syy += row[j],
                _ => sxy += row[j],
            }
        }
    }
    let (fx, fy) = (kx as f64, ky as f64);
    sxx / (fx * fx) + syy / (fy * fy) - sxy / (fx * fy)
}

/// Kernel two-sample test on biased MMD² with label permutations.
pub fn mmd_permutation_test<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    permutations: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    check_permutations(permutations)?;
    if x.len() < 2 || y.len() < 2 {
        return Err(invalid("MMD test needs at least two points per sample"));
    }
    let pooled: Vec<Vec<f64>> = x.iter().chain(y).cloned().collect();
    check_dims(&pooled)?;
    let n = pooled.len();
    let k = gaussian_gram(&pooled);
    let mut labels: Vec<bool> = (0..n).map(|i| i < x.len()).collect();
    let observed = mmd2(&k, n, &labels, x.len());
    let permuted: Vec<f64> = (0..permutations)
        .map(|_| {
            labels.shuffle(rng);
            mmd2(&k, n, &labels, x.len())
        })
        .collect();
    Ok(TestOutcome::new(
        observed,
        permutation_p(observed, permuted.into_iter(), permutations),
    ))
}

/// HSIC independence test: `Σ_ij (HKH)_ij L_ij / k²` with permutations of `y`.
pub fn hsic_permutation_test<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    permutations: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    check_permutations(permutations)?;
    let n = x.len();
    if n != y.len() {
        return Err(invalid("HSIC test needs samples of equal length"));
    }
    if n < 4 {
        return Err(invalid(format!("HSIC test needs at least 4 pairs, got {n}")));
    }
    check_dims(x)?;
    check_dims(y)?;
    let k = gaussian_gram(x);
    let l = gaussian_gram(y);
    // centre K once: Kc = H K H
    let row_means: Vec<f64> = (0..n)
        .map(|i| k[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let kc: Vec<f64> = (0..n * n)
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            k[ij] - row_means[i] - row_means[j] + grand
        })
        .collect();
    let nn = (n * n) as f64;
    let stat = |perm: &[usize]| {
        let mut s = 0.0;
        for i in 0..n {
            let pi = perm[i] * n;
            let row = &kc[i * n..(i + 1) * n];
            for j in 0..n {
                s += row[j] * l[pi + perm[j]];
            }
        }
        s / nn
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let observed = stat(&perm);
    let permuted: Vec<f64> = (0..permutations)
        .map(|_| {
            perm.shuffle(rng);
            stat(&perm)
        })
        .collect();
    Ok(TestOutcome::new(
        observed,
        permutation_p(observed, permuted.into_iter(), permutations),
    ))
}
