use std::fmt::Write;

use robustse::{estimate_all, t_test, FitOptions, Method};
use serde::Serialize;

use crate::data::Prepared;
use crate::output::{Envelope, Meta, Warning};

/// Methods that need no knowledge of the true error variances.
pub const DEFAULT_METHODS: [Method; 6] = [
    Method::Hc0,
    Method::Hc2,
    Method::Hc3,
    Method::Hrk,
    Method::Cjn,
    Method::LooCrossfit,
];

/// One focal coefficient under one covariance estimator. Inference fields are
/// absent when the estimated variance is not positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub coefficient: String,
    pub method: Method,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
}

pub struct FitOutcome<C> {
    pub envelope: Envelope<C, CoefficientRow>,
    /// Requested methods that could not be computed.
    pub failed_methods: usize,
}

/// Fits once, evaluates every method and tests each focal coefficient
/// against zero.
pub fn fit_report<C>(
    prepared: &Prepared,
    methods: &[Method],
    opts: &FitOptions<f64>,
    config: C,
) -> robustse::Result<FitOutcome<C>> {
    let est = estimate_all(&prepared.data, methods, opts)?;
    let mut warnings = Vec::new();
    for (i, _) in est.fit.design.dropped.iter().enumerate().filter(|(_, &d)| d) {
        warnings.push(
            Warning::new("observation-dropped", "observation dropped: unit leverage in controls")
                .at_line(prepared.lines.get(i).copied().unwrap_or(i as u64 + 2)),
        );
    }
    if !est.fit.design.redundant_controls.is_empty() {
        warnings.push(Warning::new(
            "collinear-controls",
            format!(
                "{} control column(s) are linear combinations of the others",
                est.fit.design.redundant_controls.len()
            ),
        ));
    }
    let mut rows = Vec::new();
    let mut failed_methods = 0;
    for (&method, res) in &est.results {
        let cov = match res {
            Ok(cov) => cov,
            Err(e) => {
                failed_methods += 1;
                warnings.push(
                    Warning::new("method-unavailable", format!("{method}: {e}")).for_method(method),
                );
                continue;
            }
        };
        for w in &cov.warnings {
            warnings.push(Warning::new("estimate", format!("{method}: {w}")).for_method(method));
        }
        for (j, name) in prepared.focal_names.iter().enumerate() {
            let estimate = est.fit.alpha_hat()[j];
            let test = t_test(estimate, 0.0, cov.omega[(j, j)]).ok();
            rows.push(CoefficientRow {
                coefficient: name.clone(),
                method,
                estimate,
                std_error: test.as_ref().map(|_| cov.omega[(j, j)].sqrt()),
                t: test.as_ref().map(|t| t.statistic),
                p_value: test.as_ref().map(|t| t.p_value),
            });
        }
    }
    Ok(FitOutcome {
        envelope: Envelope {
            meta: Meta::new(None, config),
            results: rows,
            warnings,
        },
        failed_methods,
    })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "---".to_string(), |x| format!("{x:.6}"))
}

pub fn format_fit_table<C>(env: &Envelope<C, CoefficientRow>) -> String {
    let name_w = env
        .results
        .iter()
        .map(|r| r.coefficient.len())
        .chain(["coefficient".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:<12} {:>14} {:>14} {:>10} {:>10}",
        "coefficient", "method", "estimate", "std.error", "t", "p"
    );
    for r in &env.results {
        let _ = writeln!(
            out,
            "{:<name_w$}  {:<12} {:>14} {:>14} {:>10} {:>10}",
            r.coefficient,
            r.method.as_str(),
            num(Some(r.estimate)),
            num(r.std_error),
            num(r.t),
            num(r.p_value)
        );
    }
    if !env.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &env.warnings {
            match w.line {
                Some(line) => {
                    let _ = writeln!(out, "  line {line}: {}", w.message);
                }
                None => {
                    let _ = writeln!(out, "  {}", w.message);
                }
            }
        }
    }
    out
}
