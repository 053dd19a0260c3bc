use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use robustse::{FitOptions, Method};
use robustse_montecarlo::{format_table, table_preset, Design, SimConfig};
use serde::Serialize;

use crate::data::{prepare, CsvTable, ModelSpec};
use crate::error::{CliError, Result};
use crate::fit::{fit_report, format_fit_table, DEFAULT_METHODS};
use crate::output::to_json;
use crate::simulate::simulate_report;

#[derive(Debug, Parser)]
#[command(name = "robustse", version, about = "Heteroskedasticity-robust standard errors with many controls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a regression from a CSV file and report robust standard errors.
    Fit(FitArgs),
    /// Run a seeded Monte Carlo study.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignArg {
    Cjn,
    SwA,
    SwB,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Columns whose coefficients are reported.
    #[arg(long, value_delimiter = ',', required = true)]
    pub focal: Vec<String>,
    /// Numeric control columns.
    #[arg(long, value_delimiter = ',')]
    pub controls: Vec<String>,
    /// Control columns expanded to one dummy per level.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
    /// Add a constant to the controls.
    #[arg(long)]
    pub intercept: bool,
    /// Estimators to report [default: every method except oracle].
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exit with status 2 if any requested method cannot be computed.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "table")]
    pub design: Option<DesignArg>,
    /// Observations (cjn).
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Dummy controls (cjn).
    #[arg(long)]
    pub q: Option<usize>,
    /// Panel units (sw-a, sw-b).
    #[arg(long)]
    pub units: Option<usize>,
    /// Periods per unit (sw-a, sw-b).
    #[arg(long)]
    pub periods: Option<usize>,
    /// Run the full grid of one of the three reference tables.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with = "design")]
    pub table: Option<u8>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Nominal level of the t-tests.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Worker threads; does not affect the results.
    #[arg(long, env = "ROBUSTSE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct FitConfig<'a> {
    data: String,
    #[serde(flatten)]
    model: &'a ModelSpec,
    methods: &'a [Method],
    strict: bool,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn requested(methods: &[Method], default: &[Method]) -> Vec<Method> {
    let mut m = if methods.is_empty() {
        default.to_vec()
    } else {
        methods.to_vec()
    };
    m.sort();
    m.dedup();
    m
}

pub fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let model = ModelSpec {
        outcome: args.outcome.clone(),
        focal: args.focal.iter().filter(|s| !s.trim().is_empty()).cloned().collect(),
        controls: args.controls.iter().filter(|s| !s.trim().is_empty()).cloned().collect(),
        categorical: args.categorical.iter().filter(|s| !s.trim().is_empty()).cloned().collect(),
        intercept: args.intercept,
    };
    model.validate()?;
    let table = CsvTable::read(&args.data)?;
    let prepared = prepare(&table, &model)?;
    let methods = requested(&args.methods, &DEFAULT_METHODS);
    let config = FitConfig {
        data: args.data.display().to_string(),
        model: &model,
        methods: &methods,
        strict: args.strict,
    };
    let outcome = fit_report(&prepared, &methods, &FitOptions::default(), config)?;
    let text = match args.format {
        Format::Json => to_json(&outcome.envelope)?,
        Format::Table => format_fit_table(&outcome.envelope),
    };
    write_out(args.output.as_deref(), &text)?;
    Ok(if args.strict && outcome.failed_methods > 0 { 2 } else { 0 })
}

fn sim_configs(args: &SimulateArgs) -> Result<Vec<SimConfig>> {
    let mut configs = match (args.table, args.design) {
        (Some(t), _) => table_preset(t, args.reps, args.seed)?,
        (None, Some(d)) => {
            let need = |v: Option<usize>, flag: &str| {
                v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this design")))
            };
            let design = match d {
                DesignArg::Cjn => Design::Cjn {
                    n: args.n,
                    q: need(args.q, "q")?,
                },
                DesignArg::SwA => Design::SwA {
                    units: need(args.units, "units")?,
                    periods: need(args.periods, "periods")?,
                },
                DesignArg::SwB => Design::SwB {
                    units: need(args.units, "units")?,
                    periods: need(args.periods, "periods")?,
                },
            };
            vec![SimConfig::new(design, args.reps, args.seed)]
        }
        (None, None) => return Err(CliError::Usage("give --design or --table".into())),
    };
    let methods = requested(&args.methods, &Method::ALL);
    for c in &mut configs {
        c.methods = methods.clone();
        c.level = args.level;
        c.validate()?;
    }
    Ok(configs)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let configs = sim_configs(args)?;
    let env = simulate_report(configs, args.threads)?;
    let json = to_json(&env)?;
    if let Some(path) = &args.json {
        std::fs::write(path, &json)?;
    }
    let text = match args.format {
        Format::Json => json,
        Format::Table => {
            let mut t = format_table(&env.results);
            for w in &env.warnings {
                t.push_str(&w.message);
                t.push('\n');
            }
            t
        }
    };
    write_out(None, &text)?;
    Ok(0)
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let res = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
