//! Command-line front-end: `fit` reads a CSV file and reports robust
//! standard errors for the focal coefficients, `simulate` runs the Monte
//! Carlo studies. Both can emit a JSON document of the form
//! `{meta: {version, seed?, config}, results: [...], warnings: [...]}`.

pub mod cli;
pub mod data;
pub mod error;
pub mod fit;
pub mod output;
pub mod simulate;

pub use cli::run;
pub use error::{CliError, Result};
