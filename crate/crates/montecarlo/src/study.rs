use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use robustse::inference::two_sided_critical_value;
use robustse::{Dataset64, FitOptions, Method, ModelFit64};
use serde::{Deserialize, Serialize};

use crate::dgp::{gen_cjn, gen_sw, PanelVariant};
use crate::rng::{replication_rng, GENERATOR};
use crate::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Design {
    /// Sparse dummy controls.
    Cjn { n: usize, q: usize },
    /// One-way panel, variance decreasing in `|x|`.
    SwA { units: usize, periods: usize },
    /// One-way panel, variance increasing in `|x|`.
    SwB { units: usize, periods: usize },
}

impl Design {
    pub fn n(&self) -> usize {
        match *self {
            Design::Cjn { n, .. } => n,
            Design::SwA { units, periods } | Design::SwB { units, periods } => units * periods,
        }
    }

    /// Row label in the text tables: `q` or `N/T`.
    pub fn row_label(&self) -> String {
        match *self {
            Design::Cjn { q, .. } => q.to_string(),
            Design::SwA { units, periods } | Design::SwB { units, periods } => {
                format!("{units}/{periods}")
            }
        }
    }

    fn label_header(&self) -> &'static str {
        match self {
            Design::Cjn { .. } => "q",
            _ => "N/T",
        }
    }

    pub fn generate<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> robustse::Result<Dataset64> {
        match *self {
            Design::Cjn { n, q } => gen_cjn(n, q, rng),
            Design::SwA { units, periods } => gen_sw(units, periods, PanelVariant::A, rng),
            Design::SwB { units, periods } => gen_sw(units, periods, PanelVariant::B, rng),
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::Cjn { n, q } => write!(f, "cjn n={n} q={q}"),
            Design::SwA { units, periods } => write!(f, "sw-a N={units} T={periods}"),
            Design::SwB { units, periods } => write!(f, "sw-b N={units} T={periods}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub design: Design,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Nominal level of the two-sided t-test.
    pub level: f64,
}

impl SimConfig {
    pub fn new(design: Design, reps: usize, seed: u64) -> Self {
        Self {
            design,
            reps,
            seed,
            methods: Method::ALL.to_vec(),
            level: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        match self.design {
            Design::Cjn { n, q } => {
                if q >= n {
                    return bad(format!("need q < n, got q = {q}, n = {n}"));
                }
                if n < 2 {
                    return bad("need n >= 2".into());
                }
            }
            Design::SwA { units, periods } | Design::SwB { units, periods } => {
                if units == 0 {
                    return bad("need at least one unit".into());
                }
                if periods < 2 {
                    return bad(format!("need at least 2 periods, got {periods}"));
                }
            }
        }
        Ok(())
    }

    fn sorted_methods(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}

/// What happened to one method in one replication.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Estimated { omega: f64, t: f64 },
    /// The estimator could not be computed (e.g. singular Hadamard system).
    Nonexistent,
    /// Nonpositive variance for the focal coefficient.
    Indefinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    /// Conditional variance of the focal estimate given the drawn design.
    pub omega_true: f64,
    /// Oracle estimate built from the squared true errors.
    pub omega_oracle: f64,
    pub outcomes: BTreeMap<Method, Outcome>,
}

/// Draws replication `rep` and evaluates every method on it. `Err` means the
/// fit itself failed.
pub fn run_replication(config: &SimConfig, rep: u64) -> robustse::Result<ReplicationRecord> {
    let mut rng = replication_rng(config.seed, rep);
    let data = config.design.generate(&mut rng)?;
    let truth = data.truth().expect("simulated data carries its truth");
    let alpha = truth.beta[0];
    let fit = ModelFit64::new(&data, &FitOptions::default())?;
    let alpha_hat = fit.alpha_hat()[0];

    let omega_true = fit.covariance(Method::Oracle, Some(&truth.sigma2))?.omega[(0, 0)];
    let eps2: Vec<f64> = data
        .true_errors()
        .expect("truth present")
        .iter()
        .map(|e| e * e)
        .collect();
    let oracle = fit.covariance(Method::Oracle, Some(&eps2));

    let methods = config.sorted_methods();
    let others: Vec<Method> = methods.iter().copied().filter(|&m| m != Method::Oracle).collect();
    let mut results = fit.covariances(&others, None);
    if methods.contains(&Method::Oracle) {
        results.insert(Method::Oracle, oracle.clone());
    }
    let omega_oracle = oracle?.omega[(0, 0)];

    let outcomes = results
        .into_iter()
        .map(|(m, res)| {
            let outcome = match res {
                Err(_) => Outcome::Nonexistent,
                Ok(est) => {
                    let omega = est.omega[(0, 0)];
                    if omega > 0.0 && est.is_psd() {
                        Outcome::Estimated {
                            omega,
                            t: (alpha_hat - alpha) / omega.sqrt(),
                        }
                    } else {
                        Outcome::Indefinite
                    }
                }
            };
            (m, outcome)
        })
        .collect();
    Ok(ReplicationRecord {
        omega_true,
        omega_oracle,
        outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Replications entering the summary statistics.
    pub completed: usize,
    pub nonexistent: usize,
    pub indefinite: usize,
    /// `sum(omega_hat - omega) / sum(omega)`.
    pub relative_bias: Option<f64>,
    /// RMSE of this method over the RMSE of the oracle, both taken over the
    /// replications where this method exists.
    pub relative_rmse: Option<f64>,
    pub empirical_size: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub generator: String,
    pub replications: usize,
    /// Replications where the regression itself could not be fit.
    pub failed_replications: usize,
    pub methods: Vec<MethodSummary>,
}

impl SimulationReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }

    pub(crate) fn label_header(&self) -> &'static str {
        self.config.design.label_header()
    }
}

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Aggregates records in the order given.
pub fn summarize(
    config: &SimConfig,
    records: &[robustse::Result<ReplicationRecord>],
) -> SimulationReport {
    let critical = two_sided_critical_value(config.level);
    let methods = config.sorted_methods();
    let ok: Vec<&ReplicationRecord> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
    let summaries = methods
        .iter()
        .map(|&method| {
            let (mut nonexistent, mut indefinite, mut completed, mut rejections) = (0, 0, 0, 0);
            let mut diff = KahanSum::default();
            let mut truth = KahanSum::default();
            let mut sq = KahanSum::default();
            let mut sq_oracle = KahanSum::default();
            for rec in &ok {
                match rec.outcomes.get(&method) {
                    Some(Outcome::Estimated { omega, t }) => {
                        completed += 1;
                        let d = omega - rec.omega_true;
                        let d0 = rec.omega_oracle - rec.omega_true;
                        diff.add(d);
                        truth.add(rec.omega_true);
                        sq.add(d * d);
                        sq_oracle.add(d0 * d0);
                        if t.abs() > critical {
                            rejections += 1;
                        }
                    }
                    Some(Outcome::Indefinite) => indefinite += 1,
                    Some(Outcome::Nonexistent) | None => nonexistent += 1,
                }
            }
            let have = completed > 0;
            MethodSummary {
                method,
                completed,
                nonexistent,
                indefinite,
                relative_bias: have.then(|| diff.value() / truth.value()),
                relative_rmse: (have && sq_oracle.value() > 0.0)
                    .then(|| (sq.value() / sq_oracle.value()).sqrt()),
                empirical_size: have.then(|| rejections as f64 / completed as f64),
            }
        })
        .collect();
    SimulationReport {
        config: config.clone(),
        generator: GENERATOR.to_string(),
        replications: records.len(),
        failed_replications: records.len() - ok.len(),
        methods: summaries,
    }
}

/// Runs every replication on the current rayon pool. The report does not
/// depend on the number of worker threads.
pub fn run_study(config: &SimConfig) -> Result<SimulationReport, SimError> {
    config.validate()?;
    let records: Vec<_> = (0..config.reps as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect();
    Ok(summarize(config, &records))
}

/// The grid of designs behind each of the three published tables.
pub fn table_preset(table: u8, reps: usize, seed: u64) -> Result<Vec<SimConfig>, SimError> {
    let designs: Vec<Design> = match table {
        1 => [10, 100, 250, 400, 450]
            .into_iter()
            .map(|q| Design::Cjn { n: 500, q })
            .collect(),
        2 | 3 => {
            let mut v = Vec::new();
            for units in [100, 250] {
                for periods in [2, 3, 4] {
                    v.push(if table == 2 {
                        Design::SwA { units, periods }
                    } else {
                        Design::SwB { units, periods }
                    });
                }
            }
            v
        }
        other => {
            return Err(SimError::InvalidConfig(format!(
                "unknown table {other}; expected 1, 2 or 3"
            )))
        }
    };
    Ok(designs
        .into_iter()
        .map(|d| SimConfig::new(d, reps, seed))
        .collect())
}
