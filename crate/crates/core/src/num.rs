use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating point scalar the numeric core is written against (`f32` or `f64`).
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

#[inline]
pub(crate) fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 is representable in every Real")
}
