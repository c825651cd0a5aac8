//! Ordinary least squares with an intercept.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};

/// Least-squares fit of `y ~ 1 + X`. `coefficients[0]` is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub df_resid: usize,
    pub n: usize,
}

impl OlsFit {
    pub fn sigma(&self) -> f64 {
        (self.rss / self.df_resid as f64).sqrt()
    }
}

/// Fits `y` on the columns of `x` (each inner vector is one covariate).
pub fn ols(y: &[f64], x: &[Vec<f64>]) -> Result<OlsFit> {
    let n = y.len();
    let p = x.len() + 1;
    if x.iter().any(|c| c.len() != n) {
        return Err(invalid("covariate length differs from response length"));
    }
    if n <= p {
        return Err(invalid(format!(
            "need more than {p} rows to fit {} covariates, got {n}",
            p - 1
        )));
    }
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[j - 1][i] });
    let yv = DVector::from_column_slice(y);

    // Column scaling makes the rank check independent of units.
    let scales: Vec<f64> = (0..p)
        .map(|j| design.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let tol = 1e-10 * (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= tol) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().transpose() * &yv;
    let beta_scaled = r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign)?;
    let coefficients: Vec<f64> = (0..p).map(|j| beta_scaled[j] / scales[j]).collect();

    let fitted = &design * DVector::from_column_slice(&coefficients);
    let rss = (yv - fitted).norm_squared();
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;
    let r_inv = r.try_inverse().ok_or(Error::SingularDesign)?;
    let cov_scaled = &r_inv * r_inv.transpose();
    let std_errors = (0..p)
        .map(|j| (sigma2 * cov_scaled[(j, j)]).sqrt() / scales[j])
        .collect();
    Ok(OlsFit {
        coefficients,
        std_errors,
        rss,
        df_resid,
        n,
    })
}

/// [`ols`] on named dataset columns.
pub fn ols_columns<S: AsRef<str>>(data: &Dataset, response: &str, covariates: &[S]) -> Result<OlsFit> {
    let y = data.column(response)?;
    let x = covariates
        .iter()
        .map(|c| data.column(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    ols(&y, &x)
}
