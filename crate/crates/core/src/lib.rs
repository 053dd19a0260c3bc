//! Heteroskedasticity-robust covariance estimation for the coefficients of a
//! focal block of regressors when the regression also carries many control
//! variables.
//!
//! The central estimator weights each observation by `y_i * loo_i`, where
//! `loo_i` is the leave-one-out prediction error. This is conditionally
//! unbiased for the error variance no matter how many controls are included,
//! as long as no observation has unit leverage. The classical alternatives
//! (Eicker-White, HC2, HC3) and two Hadamard-system corrections are provided
//! alongside for comparison.
//!
//! Everything is generic over [`Scalar`] (`f64` and `f32`). The aliases at the
//! crate root fix the scalar to `f64`.
//!
//! ```
//! use robustse::{estimate_all, Controls, Dataset, FitOptions, Matrix, Method};
//!
//! let a = Matrix::from_columns(5, &[[0.2, -1.0, 0.7, 1.5, -0.3]]);
//! let b = Matrix::from_columns(5, &[[1.0; 5]]);
//! let y: Vec<f64> = vec![0.5, -0.9, 1.1, 1.2, 0.1];
//! let data = Dataset::new(y, a, Controls::Dense(b)).unwrap();
//! let est = estimate_all(&data, &[Method::LooCrossfit], &FitOptions::default()).unwrap();
//! let omega = &est.results[&Method::LooCrossfit].as_ref().unwrap().omega;
//! assert!(omega[(0, 0)].is_finite());
//! ```

pub mod error;
pub mod estimators;
pub mod inference;
pub mod linalg;
pub mod regression;
pub mod scalar;

pub use error::{Error, Result};
pub use estimators::{
    crossfit_weights, estimate_all, hadamard_unbiased_weights, hc_weights, oracle_weights,
    sandwich, CovarianceEstimate, EstimateWarning, Estimates, HcKind, Method, VarianceWeights,
    WeightDiagnostics,
};
pub use inference::{t_test, wald_test, TestResult};
pub use linalg::{Cholesky, Matrix, PivotedQr};
pub use regression::{
    annihilator_diag, annihilator_matrix, fit_ols, loo_residuals, partial_out,
    AnnihilatorMatrix, AnnihilatorSource, Controls, Dataset, FitOptions, Groups, LooResiduals,
    ModelFit, OlsFit, PartialledDesign, Truth,
};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Dataset64 = Dataset<f64>;
pub type OlsFit64 = OlsFit<f64>;
pub type ModelFit64 = ModelFit<f64>;
pub type PartialledDesign64 = PartialledDesign<f64>;
pub type CovarianceEstimate64 = CovarianceEstimate<f64>;
pub type VarianceWeights64 = VarianceWeights<f64>;
pub type Estimates64 = Estimates<f64>;
pub type TestResult64 = TestResult<f64>;
