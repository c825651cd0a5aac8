//! Piecewise-constant target/observed densities on `[0, ∞)` whose shift
//! factor has a finite second moment, yet resampling `m ≫ √n` points breaks
//! the level of a simple test.
//!
//! On the cell `[v, v+1)` the target density is `f_v = c_{v+1} - c_v` with
//! `c_v = (1-α)^{1/v}` (and `c_0 = 0`), and the observed density is
//! `g_v = p_{v+1} - p_v` with `p_v = 1 - (v+1)^{-ε}`. Cells are indexed with
//! `f64` so that far-tail draws do not overflow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircasePair {
    alpha: f64,
    eps: f64,
}

impl StaircasePair {
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { alpha, eps })
    }

    /// Pair for which `1{max(x_1..x_m) <= m}` rejects with probability
    /// exactly `level` under the target, for every `m`.
    pub fn for_test_level(level: f64, eps: f64) -> Result<Self> {
        Self::new(1.0 - level, eps)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn log_keep(&self) -> f64 {
        (-self.alpha).ln_1p()
    }

    /// Target cdf at the integer `v`.
    pub fn c(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            (self.log_keep() / v).exp()
        }
    }

    /// Observed cdf at the integer `v`.
    pub fn p(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            -(-self.eps * v.ln_1p()).exp_m1()
        }
    }

    fn ln_f(&self, v: f64) -> f64 {
        let l = self.log_keep();
        if v < 1.0 {
            l
        } else {
            // c_{v+1} - c_v = c_v (exp(-L / (v(v+1))) - 1)
            l / v + (-l / (v * (v + 1.0))).exp_m1().ln()
        }
    }

    fn ln_g(&self, v: f64) -> f64 {
        // (v+1)^{-ε} (1 - ((v+1)/(v+2))^ε)
        -self.eps * v.ln_1p() + (-(-self.eps * (1.0 / (v + 1.0)).ln_1p()).exp_m1()).ln()
    }

    /// Target mass of cell `v`.
    pub fn f_cell(&self, v: f64) -> f64 {
        self.ln_f(v).exp()
    }

    /// Observed mass of cell `v`.
    pub fn g_cell(&self, v: f64) -> f64 {
        self.ln_g(v).exp()
    }

    /// Shift factor `f/g` on cell `v`.
    pub fn ratio_cell(&self, v: f64) -> f64 {
        (self.ln_f(v) - self.ln_g(v)).exp()
    }

    /// Shift factor at a point of `[0, ∞)`.
    pub fn ratio(&self, x: f64) -> f64 {
        self.ratio_cell(x.max(0.0).floor())
    }

    pub fn target_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let v = x.floor();
        self.c(v) + (x - v) * self.f_cell(v)
    }

    pub fn observed_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let v = x.floor();
        self.p(v) + (x - v) * self.g_cell(v)
    }

    /// Inverse-cdf draw from the target density.
    pub fn sample_target<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let l = self.log_keep();
        // c_v <= u < c_{v+1}  <=>  v = floor(L / ln u)
        let v = if u < 1.0 - self.alpha { 0.0 } else { (l / u.ln()).floor() };
        let x = v + (u - self.c(v)) / self.f_cell(v);
        x.clamp(v, next_below(v + 1.0))
    }

    /// Inverse-cdf draw from the observed density.
    pub fn sample_observed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t = 1.0 - rng.random::<f64>();
        // (v+2)^{-ε} < t <= (v+1)^{-ε}
        let v = (t.powf(-1.0 / self.eps).floor() - 1.0).max(0.0);
        let x = v + ((-self.eps * v.ln_1p()).exp() - t) / self.g_cell(v);
        x.clamp(v, next_below(v + 1.0))
    }

    /// Partial sum `Σ_{v=0}^{last} f_v^ℓ / g_v^{ℓ-1}`, the `ℓ`-th moment of
    /// the shift factor under the observed density.
    pub fn ratio_moment_partial(&self, ell: f64, last: u64) -> f64 {
        (0..=last)
            .map(|v| {
                let v = v as f64;
                (ell * self.ln_f(v) - (ell - 1.0) * self.ln_g(v)).exp()
            })
            .sum()
    }
}

fn next_below(x: f64) -> f64 {
    x - x * f64::EPSILON / 2.0
}
