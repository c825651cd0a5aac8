use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Division of `n` rows into a fitting part `n1` and a testing part `n2`
/// with `n1^a ≈ √n2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub a: f64,
    pub n1: usize,
    pub n2: usize,
}

impl SplitPlan {
    /// Minimizes `|n1^a − √(n − n1)|` over `2 ≤ n1 ≤ n − 2`; ties go to the smaller `n1`.
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid(format!("split exponent must lie in (0, 1], got {a}")));
        }
        if n < 4 {
            return Err(invalid(format!("need at least 4 rows to split, got {n}")));
        }
        let gap = |n1: usize| ((n1 as f64).powf(a) - ((n - n1) as f64).sqrt()).abs();
        let mut best = 2;
        let mut best_gap = gap(2);
        for n1 in 3..=n - 2 {
            let g = gap(n1);
            if g < best_gap {
                best = n1;
                best_gap = g;
            }
        }
        Ok(Self {
            a,
            n1: best,
            n2: n - best,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let s = SplitPlan::new(110, 1.0).unwrap();
        assert_eq!((s.n1, s.n2), (10, 100));
        for n in [10, 100, 2000] {
            let s = SplitPlan::new(n, 0.5).unwrap();
            assert_eq!((s.n1, s.n2), (n / 2, n / 2));
        }
        assert!(SplitPlan::new(3, 0.5).is_err());
        assert!(SplitPlan::new(100, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_valid(n in 4usize..3000, a in 0.05f64..=1.0) {
            let s = SplitPlan::new(n, a).unwrap();
            prop_assert_eq!(s.n1 + s.n2, n);
            prop_assert!(s.n1 >= 2 && s.n2 >= 2);
        }
    }
}
