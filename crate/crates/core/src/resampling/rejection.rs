use rand::Rng;

use super::{IndexSample, Stage};
use crate::error::{invalid, Error, Result};

/// Keeps row `i` independently with probability `w_i / bound`; kept rows are
/// i.i.d. from the target when `w` is the exact density ratio.
pub fn rejection_sample<R: Rng + ?Sized>(weights: &[f64], bound: f64, rng: &mut R) -> Result<IndexSample> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(invalid(format!("bound must be positive and finite, got {bound}")));
    }
    let mut kept = Vec::new();
    for (index, &w) in weights.iter().enumerate() {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::NegativeWeight { index, value: w });
        }
        if w > bound {
            return Err(Error::BoundViolated { index, value: w, bound });
        }
        if rng.random::<f64>() * bound < w {
            kept.push(index);
        }
    }
    Ok(IndexSample {
        indices: kept,
        distinct: true,
        stage: Stage::Rejection,
        attempts: Default::default(),
        approximate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn extremes() {
        let mut rng = RandomStream::new(0, 0).rng();
        let all = rejection_sample(&[2.0; 100], 2.0, &mut rng).unwrap();
        assert_eq!(all.indices, (0..100).collect::<Vec<_>>());
        let none = rejection_sample(&[0.0; 100], 2.0, &mut rng).unwrap();
        assert!(none.is_empty());
        assert!(matches!(
            rejection_sample(&[1.0, 3.0], 2.0, &mut rng),
            Err(Error::BoundViolated { index: 1, .. })
        ));
        assert!(rejection_sample(&[1.0], 0.0, &mut rng).is_err());
    }
}
