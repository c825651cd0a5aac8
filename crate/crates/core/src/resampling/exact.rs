use std::collections::BTreeMap;

use super::check;
use crate::error::{invalid, Error, Result};

/// Exact DRPL law by enumerating every distinct index sequence.
/// Limited to `n <= 8`, `m <= 4`.
pub fn drpl_exact_distribution(weights: &[f64], m: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    let n = weights.len();
    if n > 8 || m > 4 {
        return Err(Error::InstanceTooLarge { n, m });
    }
    check(weights)?;
    if m == 0 || m > n {
        return Err(invalid(format!("resample size must lie in [1, {n}], got {m}")));
    }
    let mut out = BTreeMap::new();
    let mut seq = Vec::with_capacity(m);
    enumerate(weights, m, &mut seq, 1.0, &mut out);
    let total: f64 = out.values().sum();
    if total == 0.0 {
        return Err(Error::TooFewPositiveWeights {
            needed: m,
            available: weights.iter().filter(|&&w| w > 0.0).count(),
        });
    }
    for p in out.values_mut() {
        *p /= total;
    }
    Ok(out)
}

fn enumerate(w: &[f64], m: usize, seq: &mut Vec<usize>, prod: f64, out: &mut BTreeMap<Vec<usize>, f64>) {
    if seq.len() == m {
        out.insert(seq.clone(), prod);
        return;
    }
    for i in 0..w.len() {
        if !seq.contains(&i) {
            seq.push(i);
            enumerate(w, m, seq, prod * w[i], out);
            seq.pop();
        }
    }
}
