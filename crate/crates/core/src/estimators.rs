//! Per-observation variance weights and the sandwich
//! `G^{-1} (sum_i v_i v_i' w_i) G^{-1}` with `G = sum_i v_i v_i'`.
//!
//! | method         | weight `w_i`                          | signed |
//! |----------------|---------------------------------------|--------|
//! | `oracle`       | `sigma_i^2` (or observed `eps_i^2`)   | no     |
//! | `hc0`          | `e_i^2`                               | no     |
//! | `hc2`          | `e_i * e_i / m_ii`                    | no*    |
//! | `hc3`          | `(e_i / m_ii)^2`                      | no     |
//! | `hrk`          | `((M_X o M_X)^{-1} (e o e))_i`        | yes    |
//! | `cjn`          | `((M_B o M_B)^{-1} (e o e))_i`        | yes    |
//! | `loo-crossfit` | `y_i * e_i / m_ii`                    | yes    |
//!
//! `e` are full-sample residuals and `m_ii` the diagonal of `M_X`.
//! (*) `hc2` is a product of two same-signed numbers and never negative in
//! exact arithmetic, but the type does not promise it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::regression::{
    gram_cholesky, AnnihilatorMatrix, AnnihilatorSource, Dataset, FitOptions, LooResiduals,
    ModelFit, PartialledDesign,
};
use crate::scalar::Scalar;

/// Covariance estimator, in the column order used by reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "hc0")]
    Hc0,
    #[serde(rename = "hc2")]
    Hc2,
    #[serde(rename = "hc3")]
    Hc3,
    #[serde(rename = "hrk")]
    Hrk,
    #[serde(rename = "cjn")]
    Cjn,
    #[serde(rename = "loo-crossfit")]
    LooCrossfit,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Oracle,
        Method::Hc0,
        Method::Hc2,
        Method::Hc3,
        Method::Hrk,
        Method::Cjn,
        Method::LooCrossfit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Hc0 => "hc0",
            Method::Hc2 => "hc2",
            Method::Hc3 => "hc3",
            Method::Hrk => "hrk",
            Method::Cjn => "cjn",
            Method::LooCrossfit => "loo-crossfit",
        }
    }

    /// Whether the weights are nonnegative by construction.
    pub fn nonnegative(self) -> bool {
        matches!(self, Method::Oracle | Method::Hc0 | Method::Hc3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Method::Oracle,
            "hc0" | "eicker-white" => Method::Hc0,
            "hc2" | "au" => Method::Hc2,
            "hc3" | "jk" => Method::Hc3,
            "hrk" => Method::Hrk,
            "cjn" => Method::Cjn,
            "loo" | "loo-crossfit" | "crossfit" => Method::LooCrossfit,
            other => return Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HcKind {
    Hc0,
    Hc2,
    Hc3,
}

impl From<HcKind> for Method {
    fn from(k: HcKind) -> Self {
        match k {
            HcKind::Hc0 => Method::Hc0,
            HcKind::Hc2 => Method::Hc2,
            HcKind::Hc3 => Method::Hc3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightDiagnostics<T> {
    /// Smallest annihilator diagonal among observations used.
    pub min_m_diag: Option<T>,
    /// Whether `min_i M_ii > 1/2` held (Hadamard methods only).
    pub hadamard_condition_ok: Option<bool>,
}

/// Variance estimates for each observation. Entries of dropped observations
/// are zero and never read.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceWeights<T> {
    pub method: Method,
    pub w: Vec<T>,
    pub diagnostics: WeightDiagnostics<T>,
}

impl<T: Scalar> VarianceWeights<T> {
    pub fn negative_count(&self) -> usize {
        self.w.iter().filter(|&&v| v < T::zero()).count()
    }
}

fn check_loo<T: Scalar>(loo: &LooResiduals<T>, dropped: &[bool]) -> Result<()> {
    match loo.first_unexcused(dropped) {
        Some(observation) => Err(Error::UnitLeverage { observation }),
        None => Ok(()),
    }
}

fn check_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {n}")));
    }
    Ok(())
}

/// Eicker-White (`hc0`), almost-unbiased (`hc2`) or jackknife (`hc3`) weights.
pub fn hc_weights<T: Scalar>(
    kind: HcKind,
    residuals: &[T],
    loo: &LooResiduals<T>,
    dropped: &[bool],
) -> Result<VarianceWeights<T>> {
    let n = residuals.len();
    check_len("loo residuals", loo.values.len(), n)?;
    check_len("drop mask", dropped.len(), n)?;
    if kind != HcKind::Hc0 {
        check_loo(loo, dropped)?;
    }
    let w = residuals
        .iter()
        .zip(&loo.values)
        .zip(dropped)
        .map(|((&e, &l), &d)| {
            if d {
                return T::zero();
            }
            match kind {
                HcKind::Hc0 => e * e,
                HcKind::Hc2 => e * l,
                HcKind::Hc3 => l * l,
            }
        })
        .collect();
    Ok(VarianceWeights {
        method: kind.into(),
        w,
        diagnostics: WeightDiagnostics::default(),
    })
}

/// Cross-fit weights `y_i * loo_i`, conditionally unbiased for `sigma_i^2`.
pub fn crossfit_weights<T: Scalar>(
    y: &[T],
    loo: &LooResiduals<T>,
    dropped: &[bool],
) -> Result<VarianceWeights<T>> {
    check_len("loo residuals", loo.values.len(), y.len())?;
    check_len("drop mask", dropped.len(), y.len())?;
    check_loo(loo, dropped)?;
    let w = y
        .iter()
        .zip(&loo.values)
        .zip(dropped)
        .map(|((&yi, &l), &d)| if d { T::zero() } else { yi * l })
        .collect();
    Ok(VarianceWeights {
        method: Method::LooCrossfit,
        w,
        diagnostics: WeightDiagnostics::default(),
    })
}

/// Solves `(M o M) w = e o e` over the observations not dropped. The source
/// of `m` selects `hrk` (full design) or `cjn` (controls only).
///
/// The system is split into the independent blocks induced by exact zeros in
/// `m` (one per group under one-way dummies) and each block is factored by
/// Cholesky. A pivot at or below `eps * n * max_row_sum` means the system is
/// singular and the estimator does not exist.
pub fn hadamard_unbiased_weights<T: Scalar>(
    m: &AnnihilatorMatrix<T>,
    residuals: &[T],
    dropped: &[bool],
) -> Result<VarianceWeights<T>> {
    let n = residuals.len();
    check_len("annihilator", m.m.nrows(), n)?;
    check_len("drop mask", dropped.len(), n)?;
    let method = match m.source {
        AnnihilatorSource::FullX => Method::Hrk,
        AnnihilatorSource::ControlsOnly => Method::Cjn,
    };
    let keep: Vec<usize> = (0..n).filter(|&i| !dropped[i]).collect();
    let nk = keep.len();

    let mut min_m = T::infinity();
    let mut max_row = T::zero();
    for &j in &keep {
        min_m = min_m.min(m.m[(j, j)]);
        let s: T = keep.iter().map(|&i| m.m[(i, j)] * m.m[(i, j)]).sum();
        max_row = max_row.max(s);
    }
    let diagnostics = WeightDiagnostics {
        min_m_diag: (nk > 0).then_some(min_m),
        hadamard_condition_ok: (nk > 0).then_some(min_m > T::of(0.5)),
    };
    let floor = T::epsilon() * T::of(nk.max(1) as f64) * max_row;

    let mut w = vec![T::zero(); n];
    for block in zero_pattern_blocks(&m.m, &keep) {
        let size = block.len();
        let h = Matrix::from_fn(size, size, |a, b| {
            let v = m.m[(block[a], block[b])];
            v * v
        });
        let chol = Cholesky::in_place(h, floor).map_err(|f| Error::HadamardSingular {
            pivot: block[f.index],
        })?;
        let rhs: Vec<T> = block.iter().map(|&i| residuals[i] * residuals[i]).collect();
        for (&i, wi) in block.iter().zip(chol.solve(&rhs)) {
            w[i] = wi;
        }
    }
    Ok(VarianceWeights {
        method,
        w,
        diagnostics,
    })
}

/// Connected components of the nonzero pattern of symmetric `m` restricted
/// to `keep`, each sorted ascending, ordered by smallest member.
fn zero_pattern_blocks<T: Scalar>(m: &Matrix<T>, keep: &[usize]) -> Vec<Vec<usize>> {
    let nk = keep.len();
    let mut parent: Vec<usize> = (0..nk).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for b in 0..nk {
        let col = m.col(keep[b]);
        for a in (b + 1)..nk {
            if col[keep[a]] != T::zero() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..nk {
        let r = find(&mut parent, a);
        blocks.entry(r).or_default().push(keep[a]);
    }
    blocks.into_values().collect()
}

/// Weights equal to given variances (true `sigma^2`, or observed squared
/// errors in simulations).
pub fn oracle_weights<T: Scalar>(sigma2: &[T]) -> VarianceWeights<T> {
    VarianceWeights {
        method: Method::Oracle,
        w: sigma2.to_vec(),
        diagnostics: WeightDiagnostics::default(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimateWarning {
    /// Signed weights with this many negative entries.
    NegativeWeights { count: usize },
    /// Estimated covariance is not positive semidefinite.
    IndefiniteOmega,
    /// Hadamard system solved although `min_i M_ii <= 1/2`.
    LowLeverageMargin,
}

impl fmt::Display for EstimateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegativeWeights { count } => write!(f, "{count} negative variance weights"),
            Self::IndefiniteOmega => f.write_str("covariance estimate is indefinite"),
            Self::LowLeverageMargin => {
                f.write_str("min annihilator diagonal <= 1/2; hadamard system near its limit")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEstimate<T> {
    pub omega: Matrix<T>,
    pub method: Method,
    /// Observations with a nonzero partialled row.
    pub n_effective: usize,
    pub warnings: Vec<EstimateWarning>,
}

impl<T: Scalar> CovarianceEstimate<T> {
    pub fn std_errors(&self) -> Vec<Option<T>> {
        self.omega
            .diag()
            .into_iter()
            .map(|v| (v > T::zero()).then(|| v.sqrt()))
            .collect()
    }

    /// Whether the estimate is positive semidefinite up to rounding.
    pub fn is_psd(&self) -> bool {
        is_psd(&self.omega)
    }
}

pub(crate) fn is_psd<T: Scalar>(omega: &Matrix<T>) -> bool {
    let scale = omega.max_abs();
    if scale == T::zero() {
        return true;
    }
    let p = omega.nrows();
    let slack = T::epsilon() * T::of(16.0 * p as f64) * scale;
    let mut shifted = omega.clone();
    for i in 0..p {
        shifted[(i, i)] += slack;
    }
    Cholesky::in_place(shifted, T::zero()).is_ok()
}

/// `G^{-1} (sum_i v_i v_i' w_i) G^{-1}`.
pub fn sandwich<T: Scalar>(
    design: &PartialledDesign<T>,
    weights: &VarianceWeights<T>,
) -> Result<CovarianceEstimate<T>> {
    let (n, p) = (design.n(), design.p());
    check_len("weights", weights.w.len(), n)?;
    let ginv = gram_cholesky(&design.gram)?.inverse();
    let mut meat = Matrix::zeros(p, p);
    let mut n_effective = 0;
    for i in 0..n {
        if design.dropped[i] {
            continue;
        }
        let wi = weights.w[i];
        let mut nonzero = false;
        for b in 0..p {
            let vb = design.v_hat[(i, b)];
            nonzero |= vb != T::zero();
            if vb == T::zero() || wi == T::zero() {
                continue;
            }
            for a in b..p {
                meat[(a, b)] += design.v_hat[(i, a)] * vb * wi;
            }
        }
        n_effective += usize::from(nonzero);
    }
    for b in 0..p {
        for a in (b + 1)..p {
            meat[(b, a)] = meat[(a, b)];
        }
    }
    let mut omega = ginv.matmul(&meat).matmul(&ginv);
    omega.symmetrize();

    let mut warnings = Vec::new();
    if !weights.method.nonnegative() {
        let count = weights.negative_count();
        if count > 0 {
            warnings.push(EstimateWarning::NegativeWeights { count });
        }
    }
    if weights.diagnostics.hadamard_condition_ok == Some(false) {
        warnings.push(EstimateWarning::LowLeverageMargin);
    }
    if !is_psd(&omega) {
        warnings.push(EstimateWarning::IndefiniteOmega);
    }
    Ok(CovarianceEstimate {
        omega,
        method: weights.method,
        n_effective,
        warnings,
    })
}

impl<T: Scalar> ModelFit<T> {
    /// Variance weights for `method` from an already available annihilator
    /// where the method needs one.
    pub fn weights_with(
        &self,
        method: Method,
        sigma2: Option<&[T]>,
        annihilator: Option<&AnnihilatorMatrix<T>>,
    ) -> Result<VarianceWeights<T>> {
        let dropped = &self.design.dropped;
        let ols = &self.ols;
        let mut w = match method {
            Method::Oracle => oracle_weights(sigma2.ok_or(Error::MissingTruth)?),
            Method::Hc0 => hc_weights(HcKind::Hc0, &ols.residuals, &ols.loo_residuals, dropped)?,
            Method::Hc2 => hc_weights(HcKind::Hc2, &ols.residuals, &ols.loo_residuals, dropped)?,
            Method::Hc3 => hc_weights(HcKind::Hc3, &ols.residuals, &ols.loo_residuals, dropped)?,
            Method::LooCrossfit => crossfit_weights(self.y(), &ols.loo_residuals, dropped)?,
            Method::Hrk | Method::Cjn => {
                let source = if method == Method::Hrk {
                    AnnihilatorSource::FullX
                } else {
                    AnnihilatorSource::ControlsOnly
                };
                let owned;
                let m = match annihilator {
                    Some(m) if m.source == source => m,
                    _ => {
                        owned = self.annihilator(source)?;
                        &owned
                    }
                };
                hadamard_unbiased_weights(m, &ols.residuals, dropped)?
            }
        };
        if w.diagnostics.min_m_diag.is_none() {
            w.diagnostics.min_m_diag = Some(self.min_m_diag());
        }
        Ok(w)
    }

    pub fn weights(&self, method: Method, sigma2: Option<&[T]>) -> Result<VarianceWeights<T>> {
        self.weights_with(method, sigma2, None)
    }

    pub fn covariance(&self, method: Method, sigma2: Option<&[T]>) -> Result<CovarianceEstimate<T>> {
        sandwich(&self.design, &self.weights(method, sigma2)?)
    }

    /// Covariance estimates for several methods, building each annihilator
    /// at most once.
    pub fn covariances(
        &self,
        methods: &[Method],
        sigma2: Option<&[T]>,
    ) -> BTreeMap<Method, Result<CovarianceEstimate<T>>> {
        let mut out = BTreeMap::new();
        let needs_full = methods.contains(&Method::Hrk);
        let needs_controls = methods.contains(&Method::Cjn);
        let mut m_b = None;
        let mut m_x = None;
        if needs_full || needs_controls {
            let built = self.controls_annihilator();
            if needs_full {
                m_x = Some(built.clone().and_then(|m| self.full_annihilator_from(m)));
            }
            if needs_controls {
                m_b = Some(built);
            }
        }
        for &method in methods {
            let cached = match method {
                Method::Hrk => m_x.as_ref(),
                Method::Cjn => m_b.as_ref(),
                _ => None,
            };
            let res = match cached {
                None => self.covariance(method, sigma2),
                Some(Ok(m)) => self
                    .weights_with(method, sigma2, Some(m))
                    .and_then(|w| sandwich(&self.design, &w)),
                Some(Err(e)) => Err(e.clone()),
            };
            out.insert(method, res);
        }
        out
    }
}

/// One fit shared by every requested method.
#[derive(Clone, Debug)]
pub struct Estimates<T> {
    pub fit: ModelFit<T>,
    pub results: BTreeMap<Method, Result<CovarianceEstimate<T>>>,
}

/// Fits once and evaluates each requested estimator. Methods that cannot be
/// computed carry their error; they are never silently omitted.
pub fn estimate_all<T: Scalar>(
    data: &Dataset<T>,
    methods: &[Method],
    opts: &FitOptions<T>,
) -> Result<Estimates<T>> {
    let fit = ModelFit::new(data, opts)?;
    let sigma2 = data.truth().map(|t| t.sigma2.as_slice());
    let mut unique = methods.to_vec();
    unique.sort();
    unique.dedup();
    let results = fit.covariances(&unique, sigma2);
    Ok(Estimates { fit, results })
}
