//! t and Wald tests against the standard normal / chi-square reference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

/// Levels reported in [`TestResult::reject_at`].
pub const REPORTED_LEVELS: [f64; 3] = [0.10, 0.05, 0.01];

/// `erfc(x)` for `x >= 0` as the regularized upper incomplete gamma
/// `Q(1/2, x^2)`, which holds full double precision in the tails.
fn erfc_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    gamma_ur(0.5, x * x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    let tail = 0.5 * erfc_nonneg(x.abs() / std::f64::consts::SQRT_2);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Two-sided tail probability `P(|Z| > |z|)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc_nonneg(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Two-sided critical value `z` with `P(|Z| > z) = level`.
pub fn two_sided_critical_value(level: f64) -> f64 {
    normal_quantile(1.0 - level / 2.0)
}

/// Upper tail `P(X > x)` of a chi-square with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    /// `(level, p < level)` for each of [`REPORTED_LEVELS`].
    pub reject_at: Vec<(f64, bool)>,
    pub method: Option<Method>,
}

impl<T: Scalar> TestResult<T> {
    fn new(statistic: T, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value: T::of(p_value),
            reject_at: REPORTED_LEVELS.iter().map(|&l| (l, p_value < l)).collect(),
            method: None,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = Some(method);
        self
    }

    pub fn rejects(&self, level: T) -> bool {
        self.p_value < level
    }
}

/// Two-sided t-test of `alpha = alpha0` with variance `omega_jj`.
pub fn t_test<T: Scalar>(alpha_hat: T, alpha0: T, omega_jj: T) -> Result<TestResult<T>> {
    if !(omega_jj > T::zero()) {
        return Err(Error::NonpositiveVariance(omega_jj.as_f64()));
    }
    let t = (alpha_hat - alpha0) / omega_jj.sqrt();
    Ok(TestResult::new(t, normal_two_sided_p(t.as_f64())))
}

/// Wald test of `alpha = alpha0`: `(a - a0)' omega^{-1} (a - a0)` against
/// chi-square with `p` degrees of freedom.
pub fn wald_test<T: Scalar>(
    alpha_hat: &[T],
    alpha0: &[T],
    omega: &Matrix<T>,
) -> Result<TestResult<T>> {
    let p = alpha_hat.len();
    if alpha0.len() != p || omega.nrows() != p || omega.ncols() != p {
        return Err(Error::DimensionMismatch("wald test dimensions".into()));
    }
    let scale = omega.max_abs();
    if scale == T::zero() {
        return Err(Error::SingularOmega);
    }
    let floor = T::epsilon() * T::of(p as f64) * scale;
    let chol = match Cholesky::new(omega, floor) {
        Ok(c) => c,
        Err(f) if f.value < -floor => return Err(Error::IndefiniteOmega),
        Err(_) => return Err(Error::SingularOmega),
    };
    let d: Vec<T> = alpha_hat.iter().zip(alpha0).map(|(&a, &b)| a - b).collect();
    let z = chol.solve(&d);
    let stat: T = d.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    Ok(TestResult::new(stat, chi2_sf(stat.as_f64(), p)))
}
