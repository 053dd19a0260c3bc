//! Dense column-major linear algebra: a plain matrix type, a rank-revealing
//! Householder QR with column pivoting, and a Cholesky factorization with an
//! explicit pivot floor.
//!
//! Everything here works on contiguous columns so the inner loops are simple
//! `axpy`/`dot` kernels the compiler can vectorize.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "storage length mismatch");
        Self { nrows, ncols, data }
    }

    /// Builds a matrix from a slice of rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(
            rows.iter().all(|r| r.as_ref().len() == ncols),
            "ragged rows"
        );
        Self::from_fn(nrows, ncols, |i, j| rows[i].as_ref()[j])
    }

    pub fn from_columns<C: AsRef<[T]>>(nrows: usize, cols: &[C]) -> Self {
        let mut data = Vec::with_capacity(nrows * cols.len());
        for c in cols {
            let c = c.as_ref();
            assert_eq!(c.len(), nrows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            nrows,
            ncols: cols.len(),
            data,
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b != T::zero() {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        out
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.ncols, x.len(), "vector length mismatch");
        let mut out = vec![T::zero(); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != T::zero() {
                axpy(xj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `self' * x`.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.nrows, x.len(), "vector length mismatch");
        (0..self.ncols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `[self other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.nrows, other.nrows, "row counts differ");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            nrows: self.nrows,
            ncols: self.ncols + other.ncols,
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.ncols, |i, j| self[(rows[i], j)])
    }

    pub fn trace(&self) -> T {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&mut self, c: T) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    /// Replaces the matrix with `(A + A')/2`. Square matrices only.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.nrows, self.ncols);
        let half = T::of(0.5);
        for j in 0..self.ncols {
            for i in (j + 1)..self.nrows {
                let s = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = s;
                self[(j, i)] = s;
            }
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators so the loop vectorizes without reassociation flags
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2<T: Scalar>(x: &[T]) -> T {
    // scaled to avoid overflow on large entries
    let scale = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss: T = x.iter().map(|&v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

/// Householder QR with column pivoting, `A P = Q R`.
///
/// Factorization stops once the largest remaining column norm falls to
/// `eps * max(n, c) * |R[0,0]|`; the number of completed steps is the
/// numerical rank. Only the reflectors of the first `rank` steps are kept.
#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    factors: Matrix<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> PivotedQr<T> {
    pub fn new(mut a: Matrix<T>) -> Self {
        let (n, c) = (a.nrows, a.ncols);
        let steps = n.min(c);
        let mut perm: Vec<usize> = (0..c).collect();
        let mut norms: Vec<T> = (0..c).map(|j| norm2(a.col(j))).collect();
        let mut norms_ref = norms.clone();
        let mut tau = Vec::with_capacity(steps);
        let eps = T::epsilon();
        let recompute_thresh = eps.sqrt();
        let mut tol = T::zero();
        let mut rank = 0;

        for k in 0..steps {
            let (pvt, &pmax) = norms[k..]
                .iter()
                .enumerate()
                .fold((0, &T::neg_infinity()), |best, (i, v)| {
                    if *v > *best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
            let pvt = pvt + k;
            if k == 0 {
                tol = eps * T::of(n.max(c) as f64) * pmax;
            }
            if pmax <= tol || pmax == T::zero() {
                break;
            }
            if pvt != k {
                swap_cols(&mut a, k, pvt);
                perm.swap(k, pvt);
                norms.swap(k, pvt);
                norms_ref.swap(k, pvt);
            }

            let t = make_householder(&mut a.col_mut(k)[k..]);
            tau.push(t);
            if t != T::zero() {
                let (left, right) = a.data.split_at_mut((k + 1) * n);
                let v = &left[k * n + k..k * n + n];
                for j in 0..(c - k - 1) {
                    let col = &mut right[j * n + k..j * n + n];
                    apply_householder(v, t, col);
                }
            }

            for j in (k + 1)..c {
                if norms[j] == T::zero() {
                    continue;
                }
                let r = a[(k, j)].abs() / norms[j];
                let frac = (T::one() - r * r).max(T::zero());
                let ratio = norms[j] / norms_ref[j];
                if frac * ratio * ratio <= recompute_thresh {
                    let fresh = norm2(&a.col(j)[k + 1..]);
                    norms[j] = fresh;
                    norms_ref[j] = fresh;
                } else {
                    norms[j] *= frac.sqrt();
                }
            }
            rank = k + 1;
        }
        tau.truncate(rank);
        Self {
            factors: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn nrows(&self) -> usize {
        self.factors.nrows
    }

    pub fn ncols(&self) -> usize {
        self.factors.ncols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column permutation: position `k` of `A P` holds column `perm[k]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Original column indices that were not selected as pivots.
    pub fn redundant_columns(&self) -> Vec<usize> {
        let mut r = self.perm[self.rank..].to_vec();
        r.sort_unstable();
        r
    }

    pub fn r_diag(&self) -> Vec<T> {
        (0..self.rank).map(|k| self.factors[(k, k)]).collect()
    }

    fn reflector(&self, k: usize) -> &[T] {
        &self.factors.col(k)[k..]
    }

    /// `y <- Q' y`.
    pub fn apply_qt(&self, y: &mut [T]) {
        for k in 0..self.rank {
            apply_householder(self.reflector(k), self.tau[k], &mut y[k..]);
        }
    }

    /// `y <- Q y`.
    pub fn apply_q(&self, y: &mut [T]) {
        for k in (0..self.rank).rev() {
            apply_householder(self.reflector(k), self.tau[k], &mut y[k..]);
        }
    }

    /// Residual of `y` after projecting onto the column space: `M y`.
    pub fn project_out(&self, y: &[T]) -> Vec<T> {
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        z[..self.rank].iter_mut().for_each(|v| *v = T::zero());
        self.apply_q(&mut z);
        z
    }

    /// Columns `from..to` of the full orthogonal factor `Q`.
    fn q_columns(&self, from: usize, to: usize) -> Matrix<T> {
        let n = self.nrows();
        let mut out = Matrix::zeros(n, to - from);
        for (c, j) in (from..to).enumerate() {
            out[(j, c)] = T::one();
        }
        for k in (0..self.rank).rev() {
            let v = self.reflector(k);
            let t = self.tau[k];
            for c in 0..(to - from) {
                // column from+c of Q is untouched by reflectors k > from+c
                if from + c < k && from + c < self.rank {
                    continue;
                }
                apply_householder(v, t, &mut out.col_mut(c)[k..]);
            }
        }
        out
    }

    /// Orthonormal basis of the column space (`n x rank`).
    pub fn basis(&self) -> Matrix<T> {
        self.q_columns(0, self.rank)
    }

    /// Orthonormal basis of the orthogonal complement (`n x (n - rank)`).
    pub fn complement_basis(&self) -> Matrix<T> {
        self.q_columns(self.rank, self.nrows())
    }

    /// The thinner of the column-space basis and its complement, with a flag
    /// set when the complement was chosen.
    pub fn thin_basis(&self) -> ThinBasis<T> {
        let n = self.nrows();
        if self.rank <= n - self.rank {
            ThinBasis {
                basis: self.basis(),
                complement: false,
            }
        } else {
            ThinBasis {
                basis: self.complement_basis(),
                complement: true,
            }
        }
    }

    /// Diagonal of the annihilator `I - Q1 Q1'`.
    pub fn annihilator_diag(&self) -> Vec<T> {
        self.thin_basis().annihilator_diag()
    }

    /// Dense annihilator `I - Q1 Q1'` (equivalently `Q2 Q2'`).
    pub fn annihilator(&self) -> Matrix<T> {
        self.thin_basis().annihilator()
    }

    /// Least-squares coefficients in the original column order. Columns not
    /// selected as pivots get coefficient zero.
    pub fn solve_least_squares(&self, y: &[T]) -> Vec<T> {
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        let r = self.rank;
        for k in (0..r).rev() {
            let mut s = z[k];
            for j in (k + 1)..r {
                s -= self.factors[(k, j)] * z[j];
            }
            z[k] = s / self.factors[(k, k)];
        }
        let mut x = vec![T::zero(); self.ncols()];
        for k in 0..r {
            x[self.perm[k]] = z[k];
        }
        x
    }
}

/// Orthonormal basis of either a column space (`complement == false`) or of
/// its orthogonal complement.
#[derive(Clone, Debug)]
pub struct ThinBasis<T> {
    pub basis: Matrix<T>,
    pub complement: bool,
}

impl<T: Scalar> ThinBasis<T> {
    /// `M x`, the residual of `x` after projection on the column space.
    pub fn project_out(&self, x: &[T]) -> Vec<T> {
        let c = self.basis.tr_matvec(x);
        let proj = self.basis.matvec(&c);
        if self.complement {
            proj
        } else {
            x.iter().zip(proj).map(|(&a, b)| a - b).collect()
        }
    }

    pub fn annihilator_diag(&self) -> Vec<T> {
        let b = &self.basis;
        let mut ss = vec![T::zero(); b.nrows()];
        for c in 0..b.ncols() {
            for (s, &v) in ss.iter_mut().zip(b.col(c)) {
                *s += v * v;
            }
        }
        ss.into_iter()
            .map(|s| {
                let m = if self.complement { s } else { T::one() - s };
                m.max(T::zero()).min(T::one())
            })
            .collect()
    }

    pub fn annihilator(&self) -> Matrix<T> {
        let n = self.basis.nrows();
        let mut m = if self.complement {
            Matrix::zeros(n, n)
        } else {
            Matrix::identity(n)
        };
        let sign = if self.complement { T::one() } else { -T::one() };
        syrk(&self.basis, &mut m, sign);
        m
    }
}

fn swap_cols<T: Scalar>(a: &mut Matrix<T>, i: usize, j: usize) {
    let n = a.nrows;
    let (lo, hi) = (i.min(j), i.max(j));
    let (left, right) = a.data.split_at_mut(hi * n);
    left[lo * n..(lo + 1) * n].swap_with_slice(&mut right[..n]);
}

/// Turns `x` into `beta e_1` in place, storing the reflector tail below the
/// first entry (implicit leading one). Returns `tau`.
fn make_householder<T: Scalar>(x: &mut [T]) -> T {
    let alpha = x[0];
    let xnorm = norm2(&x[1..]);
    if xnorm == T::zero() {
        return T::zero();
    }
    let mut beta = alpha.hypot(xnorm);
    if alpha >= T::zero() {
        beta = -beta;
    }
    let tau = (beta - alpha) / beta;
    let scale = T::one() / (alpha - beta);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    x[0] = beta;
    tau
}

/// Applies `I - tau v v'` (with `v[0] = 1` implicit) to `y`.
#[inline]
fn apply_householder<T: Scalar>(v: &[T], tau: T, y: &mut [T]) {
    if tau == T::zero() {
        return;
    }
    let w = y[0] + dot(&v[1..], &y[1..]);
    let s = tau * w;
    y[0] -= s;
    axpy(-s, &v[1..], &mut y[1..]);
}

/// `m += sign * w w'`, accumulated on the lower triangle and mirrored.
fn syrk<T: Scalar>(w: &Matrix<T>, m: &mut Matrix<T>, sign: T) {
    let n = w.nrows;
    let wt = w.transpose();
    for j in 0..n {
        let wj = wt.col(j);
        let dst = &mut m.col_mut(j)[j..];
        for (k, &wjk) in wj.iter().enumerate() {
            if wjk != T::zero() {
                axpy(sign * wjk, &w.col(k)[j..], dst);
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// Lower Cholesky factor of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

/// Reason a Cholesky factorization stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PivotFailure<T> {
    pub index: usize,
    pub value: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`, failing at the first pivot `<= floor`. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: &Matrix<T>, floor: T) -> Result<Self, PivotFailure<T>> {
        Self::in_place(a.clone(), floor)
    }

    pub fn in_place(mut a: Matrix<T>, floor: T) -> Result<Self, PivotFailure<T>> {
        let n = a.nrows;
        assert_eq!(n, a.ncols, "cholesky needs a square matrix");
        for k in 0..n {
            let d = a[(k, k)];
            if !(d > floor) {
                return Err(PivotFailure { index: k, value: d });
            }
            let s = d.sqrt();
            let (left, right) = a.data.split_at_mut((k + 1) * n);
            let colk = &mut left[k * n + k..k * n + n];
            colk[0] = s;
            let inv = T::one() / s;
            colk[1..].iter_mut().for_each(|v| *v *= inv);
            let colk = &colk[1..];
            for (off, &ljk) in colk.iter().enumerate() {
                if ljk == T::zero() {
                    continue;
                }
                let j = k + 1 + off;
                let dst = &mut right[(j - k - 1) * n + j..(j - k - 1) * n + n];
                axpy(-ljk, &colk[off..], dst);
            }
        }
        for j in 0..n {
            for i in 0..j {
                a[(i, j)] = T::zero();
            }
        }
        Ok(Self { l: a })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.nrows;
        let mut x = b.to_vec();
        for k in 0..n {
            x[k] /= self.l[(k, k)];
            let xk = x[k];
            axpy(-xk, &self.l.col(k)[k + 1..], &mut x[k + 1..]);
        }
        for k in (0..n).rev() {
            let s = dot(&self.l.col(k)[k + 1..], &x[k + 1..]);
            x[k] = (x[k] - s) / self.l[(k, k)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.nrows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let x = self.solve(&e);
            inv.col_mut(j).copy_from_slice(&x);
            e[j] = T::zero();
        }
        inv.symmetrize();
        inv
    }
}
