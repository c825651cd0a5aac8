//! Shift factors and weight normalization.

use std::fmt;
use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::num::Real;

type Evaluator = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// Evaluates a (possibly unnormalized) shift factor `r(x^A)` on dataset rows.
///
/// The evaluator only ever sees the values of `domain` columns, in that order.
#[derive(Clone)]
pub struct WeightFunction {
    domain: Vec<String>,
    evaluator: Arc<Evaluator>,
    normalized: bool,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("domain", &self.domain)
            .field("normalized", &self.normalized)
            .finish_non_exhaustive()
    }
}

impl WeightFunction {
    pub fn new<F>(domain: Vec<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::try_new(domain, move |x| Ok(f(x)))
    }

    pub fn try_new<F>(domain: Vec<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            domain,
            evaluator: Arc::new(f),
            normalized: false,
        }
    }

    /// `r = 1` on every row.
    pub fn identity() -> Self {
        let mut w = Self::new(Vec::new(), |_| 1.0);
        w.normalized = true;
        w
    }

    /// Weights read from a single column.
    pub fn from_column(name: &str) -> Self {
        Self::new(vec![name.to_string()], |x| x[0])
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Raw value on a slice laid out as `domain`.
    pub fn eval_domain(&self, x: &[f64]) -> Result<f64> {
        (self.evaluator)(x)
    }

    /// `c * r`
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.evaluator.clone();
        Self::try_new(self.domain.clone(), move |x| Ok(c * inner(x)?))
    }

    /// Pointwise product of two shift factors over the union of their domains.
    pub fn product(&self, other: &WeightFunction) -> Self {
        let mut domain = self.domain.clone();
        for c in &other.domain {
            if !domain.contains(c) {
                domain.push(c.clone());
            }
        }
        let left: Vec<usize> = self
            .domain
            .iter()
            .map(|c| domain.iter().position(|d| d == c).unwrap())
            .collect();
        let right: Vec<usize> = other
            .domain
            .iter()
            .map(|c| domain.iter().position(|d| d == c).unwrap())
            .collect();
        let (a, b) = (self.evaluator.clone(), other.evaluator.clone());
        Self::try_new(domain, move |x| {
            let xa: Vec<f64> = left.iter().map(|&i| x[i]).collect();
            let xb: Vec<f64> = right.iter().map(|&i| x[i]).collect();
            Ok(a(&xa)? * b(&xb)?)
        })
    }

    /// Evaluates on every row. Infinite values are support violations;
    /// negative or NaN values are invalid.
    pub fn evaluate(&self, data: &Dataset) -> Result<Vec<f64>> {
        let idx = data.column_indices(&self.domain)?;
        let mut buf = vec![0.0; idx.len()];
        data.rows()
            .enumerate()
            .map(|(i, row)| {
                for (b, &j) in buf.iter_mut().zip(&idx) {
                    *b = row[j];
                }
                let v = (self.evaluator)(&buf)?;
                if v == f64::INFINITY {
                    Err(Error::SupportViolation { row: i + 1 })
                } else if !(v >= 0.0) || !v.is_finite() {
                    Err(Error::InvalidWeight { row: i + 1, value: v })
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

fn check_weights<T: Real>(raw: &[T]) -> Result<T> {
    if raw.is_empty() {
        return Err(Error::InvalidArgument("empty weight vector".into()));
    }
    let mut sum = T::zero();
    for (index, &w) in raw.iter().enumerate() {
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(Error::NegativeWeight {
                index,
                value: w.to_f64().unwrap_or(f64::NAN),
            });
        }
        sum = sum + w;
    }
    if sum == T::zero() {
        return Err(Error::DegenerateWeights);
    }
    Ok(sum)
}

/// Rescales nonnegative weights to arithmetic mean one.
pub fn normalize_weights<T: Real>(raw: &[T]) -> Result<Vec<T>> {
    let sum = check_weights(raw)?;
    let n = T::from_usize(raw.len()).unwrap();
    let mean = sum / n;
    Ok(raw.iter().map(|&w| w / mean).collect())
}

/// Plug-in estimate of `E_Q[r̄²]`: the mean of squared mean-one weights.
pub fn estimate_second_moment<T: Real>(raw: &[T]) -> Result<T> {
    let norm = normalize_weights(raw)?;
    let n = T::from_usize(norm.len()).unwrap();
    Ok(norm.iter().fold(T::zero(), |acc, &w| acc + w * w) / n)
}

/// Probabilities proportional to `raw` (sum one).
pub fn to_probabilities(raw: &[f64]) -> Result<Vec<f64>> {
    let sum = check_weights(raw)?;
    Ok(raw.iter().map(|&w| w / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15 * y.abs().max(1.0))
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[1.0, 1.0, 1.0, 1.0]).unwrap(), vec![1.0; 4]);
        assert!(close(&normalize_weights(&[2.0, 4.0]).unwrap(), &[2.0 / 3.0, 4.0 / 3.0]));
        assert!(close(&normalize_weights(&[0.0, 0.0, 5.0]).unwrap(), &[0.0, 0.0, 3.0]));
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(normalize_weights(&[0.0, 0.0]), Err(Error::DegenerateWeights)));
        assert!(matches!(
            normalize_weights(&[1.0, -1.0]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(normalize_weights::<f64>(&[]).is_err());
    }

    #[test]
    fn normalize_single_precision() {
        let w = normalize_weights(&[2.0f32, 4.0]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(estimate_second_moment(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((estimate_second_moment(&[2.0_f64, 4.0]).unwrap() - 10.0 / 9.0).abs() < 1e-15);
        assert!((estimate_second_moment(&[0.0_f64, 0.0, 5.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(estimate_second_moment(&[0.0]).is_err());
    }

    #[test]
    fn weight_function_reads_only_its_domain() {
        let ds = Dataset::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
        )
        .unwrap();
        let w = WeightFunction::new(vec!["c".into(), "a".into()], |x| x[0] - x[1]);
        assert_eq!(w.evaluate(&ds).unwrap(), vec![2.0, 2.0]);
        let p = w.product(&WeightFunction::from_column("b"));
        assert_eq!(p.domain(), &["c".to_string(), "a".into(), "b".into()]);
        assert_eq!(p.evaluate(&ds).unwrap(), vec![4.0, 10.0]);
        assert_eq!(WeightFunction::identity().evaluate(&ds).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn weight_function_flags_bad_values() {
        let ds = Dataset::from_rows(vec!["a".into()], &[vec![1.0], vec![0.0]]).unwrap();
        let w = WeightFunction::new(vec!["a".into()], |x| 1.0 / x[0]);
        assert!(matches!(w.evaluate(&ds), Err(Error::SupportViolation { row: 2 })));
        let neg = WeightFunction::new(vec!["a".into()], |x| -x[0]);
        assert!(matches!(neg.evaluate(&ds), Err(Error::InvalidWeight { row: 1, .. })));
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(
            raw in prop::collection::vec(0.0f64..100.0, 1..50),
            c in 1e-3f64..1e3,
        ) {
            prop_assume!(raw.iter().any(|&w| w > 0.0));
            let a = normalize_weights(&raw).unwrap();
            let scaled: Vec<f64> = raw.iter().map(|w| w * c).collect();
            let b = normalize_weights(&scaled).unwrap();
            let mean = b.iter().sum::<f64>() / b.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-12);
            // recursive summation contributes up to n ulps, plus scaling and division
            let tol = (raw.len() + 3) as f64 * f64::EPSILON;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= tol * x.abs().max(f64::MIN_POSITIVE));
            }
        }

        #[test]
        fn second_moment_at_least_one(raw in prop::collection::vec(0.0f64..100.0, 1..50)) {
            prop_assume!(raw.iter().any(|&w| w > 0.0));
            prop_assert!(estimate_second_moment(&raw).unwrap() >= 1.0 - 1e-12);
        }
    }
}
