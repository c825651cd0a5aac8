use rand::seq::SliceRandom;
use rand::Rng;

use super::Alternative;
use crate::error::{invalid, Result};
use crate::result::TestOutcome;

/// Smallest admissible number of permutations.
pub const MIN_PERMUTATIONS: usize = 99;

pub(crate) fn check_permutations(b: usize) -> Result<()> {
    if b < MIN_PERMUTATIONS {
        return Err(invalid(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {b}"
        )));
    }
    Ok(())
}

/// `(1 + #{permuted >= observed}) / (B + 1)`, with a relative tolerance so
/// that permutations equal to the observed value up to rounding count.
pub(crate) fn permutation_p(observed: f64, permuted: impl Iterator<Item = f64>, b: usize) -> f64 {
    let tol = 1e-12 * observed.abs().max(1e-300);
    let hits = permuted.filter(|&s| s >= observed - tol).count();
    (1 + hits) as f64 / (b + 1) as f64
}

fn oriented(diff: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::Greater => diff,
        Alternative::Less => -diff,
        Alternative::TwoSided => diff.abs(),
    }
}

/// Two-sample permutation test on `mean(y) - mean(x)`.
pub fn mean_perm_test<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    permutations: usize,
    rng: &mut R,
) -> Result<TestOutcome> {
    check_permutations(permutations)?;
    let (kx, ky) = (x.len(), y.len());
    if kx == 0 || ky == 0 {
        return Err(invalid("mean permutation test needs two nonempty samples"));
    }
    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let total: f64 = pooled.iter().sum();
    let diff = |first: &[f64]| {
        let sx: f64 = first.iter().sum();
        (total - sx) / ky as f64 - sx / kx as f64
    };
    let observed = diff(x);
    let stat = oriented(observed, alternative);
    let permuted: Vec<f64> = (0..permutations)
        .map(|_| {
            pooled.shuffle(rng);
            oriented(diff(&pooled[..kx]), alternative)
        })
        .collect();
    Ok(TestOutcome::new(
        observed,
        permutation_p(stat, permuted.into_iter(), permutations),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn identical_samples() {
        let mut rng = RandomStream::new(0, 0).rng();
        let x = [1.0, 4.0, 2.0, 8.0];
        let y = [8.0, 2.0, 1.0, 4.0];
        let r = mean_perm_test(&x, &y, Alternative::TwoSided, 199, &mut rng).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let g = mean_perm_test(&x, &y, Alternative::Greater, 199, &mut rng).unwrap();
        assert!(g.p_value >= 0.4);
    }

    #[test]
    fn shifted_samples() {
        let mut rng = RandomStream::new(1, 0).rng();
        let x: Vec<f64> = (0..30).map(|v| (v as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
        let r = mean_perm_test(&x, &y, Alternative::Greater, 500, &mut rng).unwrap();
        assert_eq!(r.p_value, 1.0 / 501.0);
        let r = mean_perm_test(&x, &y, Alternative::TwoSided, 500, &mut rng).unwrap();
        assert_eq!(r.p_value, 1.0 / 501.0);
        let r = mean_perm_test(&x, &y, Alternative::Less, 500, &mut rng).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(mean_perm_test(&x, &y, Alternative::Less, 50, &mut rng).is_err());
    }
}
