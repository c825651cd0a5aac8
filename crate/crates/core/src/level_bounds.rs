//! Finite-sample level guarantees for resampling tests.
//!
//! For a resample of size `m` out of `n` with weight second moment
//! `K = E_Q[r̄²]`, the probability of rejecting a true target hypothesis is
//! at most `min_δ α_φ/(1-δ) + V/(V+δ²)` where
//! `V(n,m) = C(n,m)⁻¹ Σ_ℓ C(m,ℓ) C(n-m,m-ℓ) (K^ℓ - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::num::{cast, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBound<T: Real = f64> {
    pub n: usize,
    pub m: usize,
    pub k: T,
    pub alpha_phi: T,
    pub v_nm: T,
    pub delta_star: T,
    pub bound: T,
}

fn check_counts(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    Ok(())
}

fn check_k<T: Real>(k: T) -> Result<()> {
    if !(k >= T::one()) {
        return Err(invalid(format!("second moment K must be at least 1, got {k:?}")));
    }
    Ok(())
}

fn t<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("count fits the scalar type")
}

/// `ln b_ℓ` for `b_ℓ = C(m,ℓ) C(n-m,m-ℓ) / C(n,m)` over the nonzero range
/// `ℓ = max(0, 2m-n) ..= m`, built from the consecutive-term ratio so that
/// no binomial coefficient is ever formed.
pub fn log_hypergeometric_terms<T: Real>(n: usize, m: usize) -> impl Iterator<Item = (usize, T)> {
    let start = (2 * m).saturating_sub(n);
    let mut log_b = T::zero();
    if start == 0 {
        for j in 0..m {
            log_b = log_b + (t::<T>(n - m - j) / t::<T>(n - j)).ln();
        }
    } else {
        for j in 0..(n - m) {
            log_b = log_b + (t::<T>(m - j) / t::<T>(n - j)).ln();
        }
    }
    let mut l = start;
    std::iter::from_fn(move || {
        if l > m {
            return None;
        }
        let out = (l, log_b);
        if l < m {
            let a = t::<T>(m - l);
            let ratio = a * a / (t::<T>(l + 1) * t::<T>(n + l + 1 - 2 * m));
            log_b = log_b + ratio.ln();
        }
        l += 1;
        Some(out)
    })
}

/// `ln(K^l - 1)` for `K > 1`.
fn ln_pow_minus_one<T: Real>(l: usize, ln_k: T) -> T {
    let x = t::<T>(l) * ln_k;
    if x > cast(30.0) {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `V(n, m)` for weight second moment `k`.
pub fn v_nm<T: Real>(n: usize, m: usize, k: T) -> Result<T> {
    check_counts(n, m)?;
    check_k(k)?;
    if k == T::one() {
        return Ok(T::zero());
    }
    let ln_k = k.ln();
    // streaming log-sum-exp
    let mut max = T::neg_infinity();
    let mut acc = T::zero();
    for (l, log_b) in log_hypergeometric_terms::<T>(n, m) {
        if l == 0 {
            continue;
        }
        let term = log_b + ln_pow_minus_one(l, ln_k);
        if term > max {
            acc = acc * (max - term).exp() + T::one();
            max = term;
        } else {
            acc = acc + (term - max).exp();
        }
    }
    Ok((max + acc.ln()).exp())
}

fn objective<T: Real>(alpha: T, v: T, d: T) -> T {
    alpha / (T::one() - d) + v / (v + d * d)
}

fn golden_section<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> T {
    let inv_phi: T = cast(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / (T::one() + T::one())
}

/// Minimizes `α_φ/(1-δ) + V/(V+δ²)` over `δ ∈ (0,1)` for a given `V`.
/// Returns `(δ*, bound)` with the bound capped at 1.
pub fn minimize_bound<T: Real>(v: T, alpha_phi: T) -> (T, T) {
    if v == T::zero() {
        return (T::zero(), alpha_phi);
    }
    if !v.is_finite() {
        return (T::zero(), T::one());
    }
    let f = |d: T| objective(alpha_phi, v, d);
    // Geometric grid towards 0 (small V puts δ* near v^(1/3)) plus a
    // uniform grid on the upper half.
    let mut grid: Vec<T> = Vec::with_capacity(1200);
    for i in 0..600 {
        grid.push(cast::<T>(10f64.powf(-15.0 + 15.0 * i as f64 / 600.0) * 0.5));
    }
    for i in 0..600 {
        grid.push(cast::<T>(0.5 + 0.5 * i as f64 / 600.0));
    }
    grid.push(cast::<T>(1.0 - 1e-9));
    grid.retain(|&d| d > T::zero() && d < T::one());
    let best = (0..grid.len())
        .min_by(|&i, &j| f(grid[i]).partial_cmp(&f(grid[j])).unwrap())
        .unwrap();
    let lo = if best == 0 { T::zero() } else { grid[best - 1] };
    let hi = if best + 1 < grid.len() { grid[best + 1] } else { T::one() };
    let tol = cast::<T>(1e-12).max(T::epsilon() * cast(10.0));
    let mut d = golden_section(f, lo, hi, tol);
    if f(grid[best]) < f(d) {
        d = grid[best];
    }
    let bound = f(d).min(T::one());
    (d, bound)
}

/// Finite-sample level bound for resample size `m`.
pub fn finite_level_bound<T: Real>(n: usize, m: usize, k: T, alpha_phi: T) -> Result<LevelBound<T>> {
    if !(alpha_phi > T::zero() && alpha_phi < T::one()) {
        return Err(invalid(format!("alpha_phi must lie in (0, 1), got {alpha_phi:?}")));
    }
    let v = v_nm(n, m, k)?;
    let (delta_star, bound) = minimize_bound(v, alpha_phi);
    Ok(LevelBound {
        n,
        m,
        k,
        alpha_phi,
        v_nm: v,
        delta_star,
        bound,
    })
}

/// Outcome of the resample-size scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxM {
    /// Largest feasible `m` seen, if any.
    pub m: Option<usize>,
    /// Last `m` whose bound was evaluated.
    pub scanned_to: usize,
    /// True when the scan stopped before `n` after a run of failures.
    pub stopped_early: bool,
}

/// Consecutive failures after which the scan stops.
pub const SCAN_PATIENCE: usize = 64;

/// Largest `m` whose level bound stays within `alpha_psi`, by an upward scan
/// that stops after [`SCAN_PATIENCE`] consecutive failures.
pub fn max_m_for_level<T: Real>(n: usize, k: T, alpha_phi: T, alpha_psi: T) -> Result<MaxM> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    check_k(k)?;
    if !(alpha_phi > T::zero() && alpha_phi < T::one()) {
        return Err(invalid(format!("alpha_phi must lie in (0, 1), got {alpha_phi:?}")));
    }
    if alpha_psi < alpha_phi {
        return Ok(MaxM {
            m: None,
            scanned_to: 0,
            stopped_early: false,
        });
    }
    if k == T::one() {
        return Ok(MaxM {
            m: Some(n),
            scanned_to: n,
            stopped_early: false,
        });
    }
    let mut best = None;
    let mut misses = 0;
    for m in 1..=n {
        if finite_level_bound(n, m, k, alpha_phi)?.bound <= alpha_psi {
            best = Some(m);
            misses = 0;
        } else {
            misses += 1;
            if misses >= SCAN_PATIENCE {
                return Ok(MaxM {
                    m: best,
                    scanned_to: m,
                    stopped_early: m < n,
                });
            }
        }
    }
    Ok(MaxM {
        m: best,
        scanned_to: n,
        stopped_early: false,
    })
}
