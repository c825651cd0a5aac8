//! Density models, simulators and shift-factor building blocks.

mod discrete;
mod gaussian;
pub mod scm;
mod staircase;

pub use discrete::DiscreteDistribution;
pub use gaussian::{
    fit_gaussian_conditional, gaussian_conditional_logpdf, GaussianConditional, NOISE_SD_FLOOR,
};
pub use scm::{scm_simulate, Assignment, Noise, ScmSpec};
pub use staircase::StaircasePair;

use crate::num::Real;

/// Second-moment check for replacing `N(x, σ_ε²)` with an independent
/// `N(0, σ²)` when `x ~ N(0, σ_X²)`.
///
/// `E[r²]` is finite exactly when `σ² < 2(σ_ε² − σ_X²)`; returns the
/// threshold on `σ` and whether `sigma_target` lies below it.
pub fn a3_gaussian_check<T: Real>(sigma_target: T, sigma_noise: T, sigma_x: T) -> (T, bool) {
    let two = T::one() + T::one();
    let gap = two * (sigma_noise * sigma_noise - sigma_x * sigma_x);
    let threshold = gap.max(T::zero()).sqrt();
    (threshold, sigma_target < threshold)
}
