//! Least-squares fitting with the focal block `A` separated from the
//! controls `B`.
//!
//! Two routes produce an [`OlsFit`]:
//!
//! * [`fit_ols`] factors the full design `X = [A B]` directly.
//! * [`ModelFit::new`] partials the controls out of `A` first and extends the
//!   basis of `B` by the partialled focal columns. This is the route the
//!   estimators use; it never forms an `n x n` matrix unless asked to.
//!
//! Observations whose controls fit them exactly (`(H_B)_ii = 1`) stay in the
//! data but carry a zero row in the partialled design and are flagged as
//! dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix, PivotedQr, ThinBasis};
use crate::scalar::Scalar;

/// Group labels for one-way fixed effects, in `0..n_groups`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Groups {
    labels: Vec<usize>,
    n_groups: usize,
}

impl Groups {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let n_groups = labels.iter().max().map_or(0, |&m| m + 1);
        let sizes = count_sizes(&labels, n_groups);
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidInput(format!("group {g} has no observations")));
        }
        Ok(Self { labels, n_groups })
    }

    /// Balanced panel: `n_units` units observed `periods` times each, unit-major.
    pub fn balanced(n_units: usize, periods: usize) -> Self {
        Self {
            labels: (0..n_units * periods).map(|i| i / periods).collect(),
            n_groups: n_units,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        count_sizes(&self.labels, self.n_groups)
    }

    pub fn to_dummies<T: Scalar>(&self) -> Matrix<T> {
        Matrix::from_fn(self.labels.len(), self.n_groups, |i, g| {
            if self.labels[i] == g {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    fn demean<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let means = self.group_means(x);
        x.iter()
            .zip(&self.labels)
            .map(|(&v, &g)| v - means[g])
            .collect()
    }

    fn group_means<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut sums = vec![T::zero(); self.n_groups];
        for (&v, &g) in x.iter().zip(&self.labels) {
            sums[g] += v;
        }
        for (s, &c) in sums.iter_mut().zip(&self.sizes()) {
            *s /= T::of(c as f64);
        }
        sums
    }
}

fn count_sizes(labels: &[usize], n_groups: usize) -> Vec<usize> {
    let mut sizes = vec![0; n_groups];
    for &g in labels {
        sizes[g] += 1;
    }
    sizes
}

/// The control block `B`.
#[derive(Clone, Debug, PartialEq)]
pub enum Controls<T> {
    None,
    Dense(Matrix<T>),
    /// One dummy per group, handled by group demeaning.
    OneWay(Groups),
}

impl<T: Scalar> Controls<T> {
    pub fn ncols(&self) -> usize {
        match self {
            Controls::None => 0,
            Controls::Dense(b) => b.ncols(),
            Controls::OneWay(g) => g.n_groups(),
        }
    }

    fn nrows(&self) -> Option<usize> {
        match self {
            Controls::None => None,
            Controls::Dense(b) => Some(b.nrows()),
            Controls::OneWay(g) => Some(g.len()),
        }
    }

    /// Dense `n x q` matrix (dummies expanded).
    pub fn to_dense(&self, n: usize) -> Matrix<T> {
        match self {
            Controls::None => Matrix::zeros(n, 0),
            Controls::Dense(b) => b.clone(),
            Controls::OneWay(g) => g.to_dummies(),
        }
    }
}

/// True parameters of a simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth<T> {
    /// `(alpha', eta')'`, length `p + q`.
    pub beta: Vec<T>,
    /// Conditional error variances, length `n`.
    pub sigma2: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    y: Vec<T>,
    focal: Matrix<T>,
    controls: Controls<T>,
    truth: Option<Truth<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<T>, focal: Matrix<T>, controls: Controls<T>) -> Result<Self> {
        let n = y.len();
        if focal.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "focal block has {} rows, outcome has {n}",
                focal.nrows()
            )));
        }
        if focal.ncols() == 0 {
            return Err(Error::InvalidInput("at least one focal regressor is required".into()));
        }
        if let Some(rows) = controls.nrows() {
            if rows != n {
                return Err(Error::DimensionMismatch(format!(
                    "controls have {rows} rows, outcome has {n}"
                )));
            }
        }
        Ok(Self {
            y,
            focal,
            controls,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: Truth<T>) -> Result<Self> {
        if truth.beta.len() != self.p() + self.q() {
            return Err(Error::DimensionMismatch(format!(
                "truth.beta has length {}, expected {}",
                truth.beta.len(),
                self.p() + self.q()
            )));
        }
        if truth.sigma2.len() != self.n() {
            return Err(Error::DimensionMismatch("truth.sigma2 length".into()));
        }
        if truth.sigma2.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::InvalidInput("error variances must be positive".into()));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.focal.ncols()
    }

    pub fn q(&self) -> usize {
        self.controls.ncols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn focal(&self) -> &Matrix<T> {
        &self.focal
    }

    pub fn controls(&self) -> &Controls<T> {
        &self.controls
    }

    pub fn truth(&self) -> Option<&Truth<T>> {
        self.truth.as_ref()
    }

    /// Full design `[A B]` with dummies expanded.
    pub fn design_matrix(&self) -> Matrix<T> {
        self.focal.hstack(&self.controls.to_dense(self.n()))
    }

    /// `y - X beta` under the true coefficients.
    pub fn true_errors(&self) -> Option<Vec<T>> {
        let truth = self.truth.as_ref()?;
        let p = self.p();
        let mut e = self.y.clone();
        for (k, &b) in truth.beta[..p].iter().enumerate() {
            for (ei, &a) in e.iter_mut().zip(self.focal.col(k)) {
                *ei -= a * b;
            }
        }
        let eta = &truth.beta[p..];
        match &self.controls {
            Controls::None => {}
            Controls::Dense(b) => {
                let fitted = b.matvec(eta);
                e.iter_mut().zip(fitted).for_each(|(ei, f)| *ei -= f);
            }
            Controls::OneWay(g) => {
                for (ei, &lab) in e.iter_mut().zip(g.labels()) {
                    *ei -= eta[lab];
                }
            }
        }
        Some(e)
    }
}

/// Numerical settings shared by the fitting routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions<T> {
    /// Annihilator diagonal entries at or below this are treated as zero.
    pub leverage_tol: T,
    /// Error out on collinear controls instead of projecting on their span.
    pub strict_controls_rank: bool,
    /// Largest `n` for which a dense `n x n` annihilator may be formed.
    pub dense_limit: usize,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            leverage_tol: T::default_leverage_tol(),
            strict_controls_rank: false,
            dense_limit: 8192,
        }
    }
}

/// Leave-one-out residuals with a feasibility flag per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct LooResiduals<T> {
    /// `e_i / m_ii` where feasible, zero elsewhere.
    pub values: Vec<T>,
    pub feasible: Vec<bool>,
}

impl<T: Scalar> LooResiduals<T> {
    /// First infeasible observation not excused by `dropped`.
    pub fn first_unexcused(&self, dropped: &[bool]) -> Option<usize> {
        self.feasible
            .iter()
            .zip(dropped)
            .position(|(&ok, &d)| !ok && !d)
    }
}

/// Leave-one-out residuals from full-sample residuals and annihilator
/// diagonal: `e_i / m_ii`, flagged infeasible when `m_ii <= tol`.
pub fn loo_residuals<T: Scalar>(residuals: &[T], m_diag: &[T], tol: T) -> LooResiduals<T> {
    assert_eq!(residuals.len(), m_diag.len());
    let (values, feasible) = residuals
        .iter()
        .zip(m_diag)
        .map(|(&e, &m)| if m > tol { (e / m, true) } else { (T::zero(), false) })
        .unzip();
    LooResiduals { values, feasible }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit<T> {
    pub beta_hat: Vec<T>,
    pub residuals: Vec<T>,
    /// Diagonal of the annihilator of the full design.
    pub m_diag: Vec<T>,
    pub loo_residuals: LooResiduals<T>,
    pub rank: usize,
}

/// Fits `y` on `[A B]` by a single pivoted QR of the full design.
pub fn fit_ols<T: Scalar>(data: &Dataset<T>, opts: &FitOptions<T>) -> Result<OlsFit<T>> {
    let x = data.design_matrix();
    let (n, r) = (x.nrows(), x.ncols());
    if n <= r {
        return Err(Error::DegenerateSample { n, r });
    }
    let qr = PivotedQr::new(x);
    if qr.rank() < r {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            expected: r,
        });
    }
    let beta_hat = qr.solve_least_squares(data.y());
    let residuals = qr.project_out(data.y());
    let m_diag = qr.annihilator_diag();
    let loo_residuals = loo_residuals(&residuals, &m_diag, opts.leverage_tol);
    Ok(OlsFit {
        beta_hat,
        residuals,
        m_diag,
        loo_residuals,
        rank: r,
    })
}

/// Diagonal of `M_Q = I - Q (Q'Q)^{-1} Q'`.
pub fn annihilator_diag<T: Scalar>(q: &Matrix<T>) -> Result<Vec<T>> {
    if q.ncols() == 0 {
        return Ok(vec![T::one(); q.nrows()]);
    }
    let qr = PivotedQr::new(q.clone());
    if qr.rank() < q.ncols() {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            expected: q.ncols(),
        });
    }
    Ok(qr.annihilator_diag())
}

/// Which design an [`AnnihilatorMatrix`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnihilatorSource {
    FullX,
    ControlsOnly,
}

/// Dense `n x n` annihilator tagged with its source design.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnihilatorMatrix<T> {
    pub m: Matrix<T>,
    pub source: AnnihilatorSource,
}

/// Dense annihilator of `q` from an orthonormal basis of its column space.
pub fn annihilator_matrix<T: Scalar>(
    q: &Matrix<T>,
    source: AnnihilatorSource,
    opts: &FitOptions<T>,
) -> Result<AnnihilatorMatrix<T>> {
    let n = q.nrows();
    if n > opts.dense_limit {
        return Err(Error::BudgetExceeded {
            n,
            limit: opts.dense_limit,
        });
    }
    let m = if q.ncols() == 0 {
        Matrix::identity(n)
    } else {
        let qr = PivotedQr::new(q.clone());
        if qr.rank() < q.ncols() {
            return Err(Error::RankDeficient {
                rank: qr.rank(),
                expected: q.ncols(),
            });
        }
        qr.annihilator()
    };
    Ok(AnnihilatorMatrix { m, source })
}

/// Projection onto the orthogonal complement of the controls.
#[derive(Clone, Debug)]
enum ControlsProjector<T> {
    Empty { n: usize },
    Dense { qr: PivotedQr<T>, thin: ThinBasis<T> },
    OneWay(Groups),
}

impl<T: Scalar> ControlsProjector<T> {
    fn rank(&self) -> usize {
        match self {
            Self::Empty { .. } => 0,
            Self::Dense { qr, .. } => qr.rank(),
            Self::OneWay(g) => g.n_groups(),
        }
    }

    fn project_out(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Empty { .. } => x.to_vec(),
            Self::Dense { thin, .. } => thin.project_out(x),
            Self::OneWay(g) => g.demean(x),
        }
    }

    fn m_diag(&self) -> Vec<T> {
        match self {
            Self::Empty { n } => vec![T::one(); *n],
            Self::Dense { thin, .. } => thin.annihilator_diag(),
            Self::OneWay(g) => {
                let sizes = g.sizes();
                g.labels()
                    .iter()
                    .map(|&lab| T::one() - T::one() / T::of(sizes[lab] as f64))
                    .collect()
            }
        }
    }

    fn annihilator(&self) -> Matrix<T> {
        match self {
            Self::Empty { n } => Matrix::identity(*n),
            Self::Dense { thin, .. } => thin.annihilator(),
            Self::OneWay(g) => {
                let n = g.len();
                let sizes = g.sizes();
                let mut m = Matrix::zeros(n, n);
                let lab = g.labels();
                for j in 0..n {
                    let w = T::one() / T::of(sizes[lab[j]] as f64);
                    for i in 0..n {
                        if lab[i] == lab[j] {
                            m[(i, j)] = if i == j { T::one() - w } else { -w };
                        }
                    }
                }
                m
            }
        }
    }

    /// Least-squares coefficients of `r` on the controls.
    fn coefficients(&self, r: &[T]) -> Vec<T> {
        match self {
            Self::Empty { .. } => Vec::new(),
            Self::Dense { qr, .. } => qr.solve_least_squares(r),
            Self::OneWay(g) => g.group_means(r),
        }
    }
}

/// Focal regressors with the controls partialled out.
#[derive(Clone, Debug)]
pub struct PartialledDesign<T> {
    /// `M_B A`, with dropped rows set to exactly zero.
    pub v_hat: Matrix<T>,
    /// Observations fitted exactly by the controls.
    pub dropped: Vec<bool>,
    /// `sum_i v_i v_i'`.
    pub gram: Matrix<T>,
    /// Diagonal of `M_B`.
    pub m_b_diag: Vec<T>,
    pub controls_rank: usize,
    /// Control columns found collinear with earlier ones.
    pub redundant_controls: Vec<usize>,
    projector: ControlsProjector<T>,
}

impl<T: Scalar> PartialledDesign<T> {
    pub fn n(&self) -> usize {
        self.v_hat.nrows()
    }

    pub fn p(&self) -> usize {
        self.v_hat.ncols()
    }

    pub fn n_dropped(&self) -> usize {
        self.dropped.iter().filter(|&&d| d).count()
    }

    /// `M_B x`.
    pub fn residualize(&self, x: &[T]) -> Vec<T> {
        self.projector.project_out(x)
    }
}

/// Partials the controls out of the focal block and applies the
/// unit-leverage drop rule.
pub fn partial_out<T: Scalar>(
    a: &Matrix<T>,
    controls: &Controls<T>,
    opts: &FitOptions<T>,
) -> Result<PartialledDesign<T>> {
    let n = a.nrows();
    let projector = match controls {
        Controls::None => ControlsProjector::Empty { n },
        Controls::Dense(b) if b.ncols() == 0 => ControlsProjector::Empty { n },
        Controls::Dense(b) => {
            if b.nrows() != n {
                return Err(Error::DimensionMismatch("controls rows".into()));
            }
            let qr = PivotedQr::new(b.clone());
            let thin = qr.thin_basis();
            ControlsProjector::Dense { qr, thin }
        }
        Controls::OneWay(g) => {
            if g.len() != n {
                return Err(Error::DimensionMismatch("group labels".into()));
            }
            ControlsProjector::OneWay(g.clone())
        }
    };
    let redundant_controls = match &projector {
        ControlsProjector::Dense { qr, .. } => qr.redundant_columns(),
        _ => Vec::new(),
    };
    if opts.strict_controls_rank && !redundant_controls.is_empty() {
        return Err(Error::ControlsRankDeficient {
            redundant: redundant_controls,
        });
    }

    let m_b_diag = projector.m_diag();
    let dropped: Vec<bool> = m_b_diag.iter().map(|&m| m <= opts.leverage_tol).collect();
    let mut v_hat = Matrix::zeros(n, a.ncols());
    for j in 0..a.ncols() {
        let mut v = projector.project_out(a.col(j));
        for (vi, &d) in v.iter_mut().zip(&dropped) {
            if d {
                *vi = T::zero();
            }
        }
        v_hat.col_mut(j).copy_from_slice(&v);
    }
    let gram = v_hat.transpose().matmul(&v_hat);
    Ok(PartialledDesign {
        v_hat,
        dropped,
        gram,
        m_b_diag,
        controls_rank: projector.rank(),
        redundant_controls,
        projector,
    })
}

/// Cholesky of the gram matrix, failing when it is numerically singular.
pub(crate) fn gram_cholesky<T: Scalar>(gram: &Matrix<T>) -> Result<Cholesky<T>> {
    let p = gram.nrows();
    let scale = gram.diag().into_iter().fold(T::zero(), T::max);
    let floor = T::epsilon() * T::of(p.max(1) as f64) * scale;
    if scale == T::zero() {
        return Err(Error::GramSingular);
    }
    Cholesky::new(gram, floor).map_err(|_| Error::GramSingular)
}

/// A regression fitted through the partialled route, holding everything the
/// covariance estimators share.
#[derive(Clone, Debug)]
pub struct ModelFit<T> {
    pub design: PartialledDesign<T>,
    pub ols: OlsFit<T>,
    y: Vec<T>,
    gram_inv: Matrix<T>,
    opts: FitOptions<T>,
}

impl<T: Scalar> ModelFit<T> {
    pub fn new(data: &Dataset<T>, opts: &FitOptions<T>) -> Result<Self> {
        let design = partial_out(data.focal(), data.controls(), opts)?;
        let (n, p) = (data.n(), data.p());
        let rank = design.controls_rank + p;
        if n <= rank {
            return Err(Error::DegenerateSample { n, r: rank });
        }
        let chol = match gram_cholesky(&design.gram) {
            Ok(c) => c,
            Err(_) => {
                return Err(Error::RankDeficient {
                    rank: design.controls_rank,
                    expected: rank,
                })
            }
        };
        let gram_inv = chol.inverse();
        let vy = design.v_hat.tr_matvec(data.y());
        let alpha = chol.solve(&vy);

        let my = design.residualize(data.y());
        let fitted_v = design.v_hat.matvec(&alpha);
        let mut residuals: Vec<T> = my.iter().zip(&fitted_v).map(|(&a, &b)| a - b).collect();

        // m_ii = (M_B)_ii - v_i' G^{-1} v_i
        let mut m_diag = Vec::with_capacity(n);
        let mut vi = vec![T::zero(); p];
        for i in 0..n {
            if design.dropped[i] {
                m_diag.push(T::zero());
                residuals[i] = T::zero();
                continue;
            }
            for k in 0..p {
                vi[k] = design.v_hat[(i, k)];
            }
            let gv = gram_inv.matvec(&vi);
            let h = dot(&vi, &gv);
            m_diag.push((design.m_b_diag[i] - h).max(T::zero()).min(T::one()));
        }

        let mut beta_hat = alpha.clone();
        let mut partial = data.y().to_vec();
        for (k, &ak) in alpha.iter().enumerate() {
            for (r, &x) in partial.iter_mut().zip(data.focal().col(k)) {
                *r -= ak * x;
            }
        }
        beta_hat.extend(design.projector.coefficients(&partial));

        let loo = loo_residuals(&residuals, &m_diag, opts.leverage_tol);
        Ok(Self {
            ols: OlsFit {
                beta_hat,
                residuals,
                m_diag,
                loo_residuals: loo,
                rank,
            },
            design,
            y: data.y().to_vec(),
            gram_inv,
            opts: *opts,
        })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn options(&self) -> &FitOptions<T> {
        &self.opts
    }

    pub fn alpha_hat(&self) -> &[T] {
        &self.ols.beta_hat[..self.p()]
    }

    /// `(sum v_i v_i')^{-1}`.
    pub fn gram_inverse(&self) -> &Matrix<T> {
        &self.gram_inv
    }

    /// Smallest annihilator diagonal over observations not dropped.
    pub fn min_m_diag(&self) -> T {
        self.ols
            .m_diag
            .iter()
            .zip(&self.design.dropped)
            .filter(|(_, &d)| !d)
            .fold(T::infinity(), |m, (&v, _)| m.min(v))
    }

    /// Dense annihilator of the full design (`M_B - H_{M_B A}`) or of the
    /// controls alone. Rows and columns of dropped observations are zero.
    pub fn annihilator(&self, source: AnnihilatorSource) -> Result<AnnihilatorMatrix<T>> {
        let m_b = self.controls_annihilator()?;
        Ok(match source {
            AnnihilatorSource::ControlsOnly => m_b,
            AnnihilatorSource::FullX => self.full_annihilator_from(m_b)?,
        })
    }

    fn check_budget(&self) -> Result<()> {
        let n = self.n();
        if n > self.opts.dense_limit {
            return Err(Error::BudgetExceeded {
                n,
                limit: self.opts.dense_limit,
            });
        }
        Ok(())
    }

    /// Dense `M_B`.
    pub fn controls_annihilator(&self) -> Result<AnnihilatorMatrix<T>> {
        self.check_budget()?;
        let mut m = self.design.projector.annihilator();
        let n = self.n();
        for i in (0..n).filter(|&i| self.design.dropped[i]) {
            for j in 0..n {
                m[(i, j)] = T::zero();
                m[(j, i)] = T::zero();
            }
        }
        Ok(AnnihilatorMatrix {
            m,
            source: AnnihilatorSource::ControlsOnly,
        })
    }

    /// `M_X = M_B - V (V'V)^{-1} V'` from a previously built `M_B`.
    pub fn full_annihilator_from(&self, m_b: AnnihilatorMatrix<T>) -> Result<AnnihilatorMatrix<T>> {
        if m_b.source != AnnihilatorSource::ControlsOnly || m_b.m.nrows() != self.n() {
            return Err(Error::InvalidInput("expected the controls annihilator of this fit".into()));
        }
        let mut m = m_b.m;
        let n = self.n();
        let p = self.p();
        let chol = gram_cholesky(&self.design.gram)?;
        let l = chol.factor();
        // rows of W = V L^{-T}, so that W W' = V G^{-1} V'
        let mut w = self.design.v_hat.clone();
        for i in 0..n {
            for k in 0..p {
                let mut s = w[(i, k)];
                for j in 0..k {
                    s -= l[(k, j)] * w[(i, j)];
                }
                w[(i, k)] = s / l[(k, k)];
            }
        }
        for k in 0..p {
            let wk = w.col(k);
            for j in 0..n {
                let c = wk[j];
                if c != T::zero() {
                    crate::linalg::axpy(-c, wk, m.col_mut(j));
                }
            }
        }
        Ok(AnnihilatorMatrix {
            m,
            source: AnnihilatorSource::FullX,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix<f64> {
        Matrix::from_columns(v.len(), &[v])
    }

    #[test]
    fn two_point_fit() {
        let data = Dataset::new(vec![1.0, 3.0], col(&[1.0, 2.0]), Controls::None).unwrap();
        let fit = fit_ols(&data, &FitOptions::default()).unwrap();
        assert!((fit.beta_hat[0] - 1.4).abs() < 1e-15);
        assert!((fit.residuals[0] + 0.4).abs() < 1e-15);
        assert!((fit.residuals[1] - 0.2).abs() < 1e-15);
        assert!((fit.m_diag[0] - 0.8).abs() < 1e-15);
        assert!((fit.m_diag[1] - 0.2).abs() < 1e-15);
        assert!((fit.loo_residuals.values[0] + 0.5).abs() < 1e-14);
        assert!((fit.loo_residuals.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn intercept_only_fit() {
        let data =
            Dataset::new(vec![1.0, 2.0, 6.0], col(&[1.0, 1.0, 1.0]), Controls::None).unwrap();
        let fit = fit_ols(&data, &FitOptions::default()).unwrap();
        let want_res = [-2.0, -1.0, 3.0];
        let want_loo = [-3.0, -1.5, 4.5];
        for i in 0..3 {
            assert!((fit.residuals[i] - want_res[i]).abs() < 1e-14);
            assert!((fit.m_diag[i] - 2.0 / 3.0).abs() < 1e-15);
            assert!((fit.loo_residuals.values[i] - want_loo[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_data_has_zero_residuals() {
        let a = col(&[1.0, 2.0, 4.0, -1.0]);
        let b = Matrix::from_columns(4, &[[1.0, 1.0, 1.0, 1.0]]);
        let y = vec![2.5, 4.5, 8.5, -1.5];
        let data = Dataset::new(y, a, Controls::Dense(b)).unwrap();
        let fit = fit_ols(&data, &FitOptions::default()).unwrap();
        assert!((fit.beta_hat[0] - 2.0).abs() < 1e-13);
        assert!((fit.beta_hat[1] - 0.5).abs() < 1e-13);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-13));
        assert!(fit.loo_residuals.values.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn degenerate_and_rank_deficient() {
        let data = Dataset::new(vec![1.0, 2.0], Matrix::identity(2), Controls::None).unwrap();
        assert_eq!(
            fit_ols(&data, &FitOptions::default()).unwrap_err(),
            Error::DegenerateSample { n: 2, r: 2 }
        );
        let a = Matrix::from_columns(3, &[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]);
        let data = Dataset::new(vec![1.0, 0.0, 2.0], a, Controls::None).unwrap();
        assert!(matches!(
            fit_ols(&data, &FitOptions::default()),
            Err(Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn demeaning_partial_out() {
        let b = Controls::Dense(Matrix::from_columns(3, &[[1.0, 1.0, 1.0]]));
        let d = partial_out(&col(&[1.0, 2.0, 3.0]), &b, &FitOptions::default()).unwrap();
        let want = [-1.0, 0.0, 1.0];
        for i in 0..3 {
            assert!((d.v_hat[(i, 0)] - want[i]).abs() < 1e-14);
        }
        assert!((d.gram[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_controls_leave_focal_unchanged() {
        let a = col(&[1.0, -2.0, 3.5]);
        let d = partial_out(&a, &Controls::None, &FitOptions::default()).unwrap();
        assert_eq!(d.v_hat, a);
        assert!(d.dropped.iter().all(|&x| !x));
    }

    #[test]
    fn strict_controls_rank() {
        let b = Matrix::from_columns(4, &[[1.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0]]);
        let opts = FitOptions {
            strict_controls_rank: true,
            ..FitOptions::default()
        };
        let err = partial_out(&col(&[1.0, 2.0, 3.0, 4.0]), &Controls::Dense(b.clone()), &opts)
            .unwrap_err();
        assert!(matches!(err, Error::ControlsRankDeficient { ref redundant } if redundant.len() == 1));
        let d = partial_out(
            &col(&[1.0, 2.0, 3.0, 4.0]),
            &Controls::Dense(b),
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(d.controls_rank, 1);
    }

    #[test]
    fn annihilator_diag_examples() {
        let d = annihilator_diag(&Matrix::from_columns(4, &[[1.0f64; 4]])).unwrap();
        assert!(d.iter().all(|&m| (m - 0.75).abs() < 1e-15));
        let d = annihilator_diag(&Matrix::<f64>::identity(3)).unwrap();
        assert!(d.iter().all(|&m| m.abs() < 1e-15));
        let panel = Groups::balanced(5, 2).to_dummies::<f64>();
        let d = annihilator_diag(&panel).unwrap();
        assert!(d.iter().all(|&m| (m - 0.5).abs() < 1e-15));
    }

    #[test]
    fn intercept_annihilator() {
        let q = Matrix::from_columns(3, &[[1.0f64; 3]]);
        let m = annihilator_matrix(&q, AnnihilatorSource::ControlsOnly, &FitOptions::default())
            .unwrap()
            .m;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((m[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dense_budget() {
        let q = Matrix::from_columns(10, &[[1.0f64; 10]]);
        let opts = FitOptions {
            dense_limit: 5,
            ..FitOptions::default()
        };
        assert_eq!(
            annihilator_matrix(&q, AnnihilatorSource::FullX, &opts).unwrap_err(),
            Error::BudgetExceeded { n: 10, limit: 5 }
        );
    }

    #[test]
    fn loo_feasibility() {
        let loo = loo_residuals(&[-0.4f64, 0.2, 0.3, 0.0], &[0.8, 0.2, 1.0, 0.0], 1e-10);
        assert!((loo.values[0] + 0.5).abs() < 1e-15);
        assert!((loo.values[1] - 1.0).abs() < 1e-15);
        assert_eq!(loo.values[2], 0.3);
        assert_eq!(loo.feasible, vec![true, true, true, false]);
        assert_eq!(loo.first_unexcused(&[false, false, false, false]), Some(3));
        assert_eq!(loo.first_unexcused(&[false, false, false, true]), None);
    }

    #[test]
    fn singleton_group_is_dropped() {
        let g = Groups::new(vec![0, 0, 1, 2, 2]).unwrap();
        let a = col(&[1.0, 2.0, 5.0, 0.5, 1.5]);
        let d = partial_out(&a, &Controls::OneWay(g), &FitOptions::default()).unwrap();
        assert_eq!(d.dropped, vec![false, false, true, false, false]);
        assert_eq!(d.v_hat[(2, 0)], 0.0);
    }

    #[test]
    fn one_way_matches_dense_dummies() {
        let g = Groups::new(vec![0, 1, 0, 2, 1, 2, 0, 1]).unwrap();
        let a = col(&[0.3, -1.2, 2.0, 0.7, 1.1, -0.4, 0.9, 0.05]);
        let y = vec![1.0, 0.2, 3.1, -0.5, 2.2, 0.1, 1.7, -1.0];
        let opts = FitOptions::default();
        let fast = ModelFit::new(
            &Dataset::new(y.clone(), a.clone(), Controls::OneWay(g.clone())).unwrap(),
            &opts,
        )
        .unwrap();
        let dense = ModelFit::new(
            &Dataset::new(y, a, Controls::Dense(g.to_dummies())).unwrap(),
            &opts,
        )
        .unwrap();
        for i in 0..8 {
            assert!((fast.ols.m_diag[i] - dense.ols.m_diag[i]).abs() < 1e-12);
            assert!((fast.ols.residuals[i] - dense.ols.residuals[i]).abs() < 1e-12);
        }
        for k in 0..4 {
            assert!((fast.ols.beta_hat[k] - dense.ols.beta_hat[k]).abs() < 1e-12);
        }
    }
}
