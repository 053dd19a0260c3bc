use std::fmt::Write;

use robustse::Method;

use crate::study::{MethodSummary, SimulationReport};

const MISSING: &str = "---";

type Panel = (String, fn(&MethodSummary) -> Option<f64>);

fn column_label(m: Method) -> &'static str {
    match m {
        Method::LooCrossfit => "loo",
        other => other.as_str(),
    }
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| MISSING.to_string(), |v| format!("{v:.3}"))
}

/// Aligned text table with one row per report and three panels: relative
/// bias, relative RMSE and empirical size. Entries that could not be computed
/// print as `---`.
pub fn format_table(reports: &[SimulationReport]) -> String {
    let mut methods: Vec<Method> = reports
        .iter()
        .flat_map(|r| r.methods.iter().map(|s| s.method))
        .collect();
    methods.sort();
    methods.dedup();
    let header = reports.first().map_or("design", |r| r.label_header());
    let labels: Vec<String> = reports.iter().map(|r| r.config.design.row_label()).collect();
    let label_w = labels.iter().map(String::len).chain([header.len()]).max().unwrap_or(0);
    let col_w = 8;
    let total_w = label_w + methods.len() * (col_w + 1);

    let mut out = String::new();
    let _ = write!(out, "{header:>label_w$}");
    for &m in &methods {
        let _ = write!(out, " {:>col_w$}", column_label(m));
    }
    out.push('\n');
    out.push_str(&"=".repeat(total_w));
    out.push('\n');

    let level = reports.first().map_or(0.05, |r| r.config.level);
    let panels: [Panel; 3] = [
        ("Relative bias".into(), |s| s.relative_bias),
        ("Relative RMSE".into(), |s| s.relative_rmse),
        (
            format!("Empirical size ({}% level)", level * 100.0),
            |s| s.empirical_size,
        ),
    ];
    for (title, get) in panels.iter() {
        let _ = writeln!(out, "{title:^total_w$}");
        for (report, label) in reports.iter().zip(&labels) {
            let _ = write!(out, "{label:>label_w$}");
            for &m in &methods {
                let _ = write!(out, " {:>col_w$}", cell(report.method(m).and_then(get)));
            }
            out.push('\n');
        }
    }
    out.push_str(&"=".repeat(total_w));
    out.push('\n');
    out
}
