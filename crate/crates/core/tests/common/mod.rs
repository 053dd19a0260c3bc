#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robustse::{Controls, Dataset64, Matrix64};

pub type Dense = Vec<Vec<f64>>;

/// Gauss-Jordan inverse with partial pivoting.
pub fn gj_inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut aug: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))?;
        if aug[piv][c].abs() < 1e-300 {
            return None;
        }
        aug.swap(c, piv);
        let d = aug[c][c];
        aug[c].iter_mut().for_each(|v| *v /= d);
        for i in 0..n {
            if i != c {
                let f = aug[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        aug[i][j] -= f * aug[c][j];
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn to_dense(m: &Matrix64) -> Dense {
    (0..m.nrows()).map(|i| m.row(i)).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Dense) -> Dense {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `I - X (X'X)^{-1} X'` by explicit inversion.
pub fn explicit_annihilator(x: &Dense) -> Dense {
    let n = x.len();
    let mut m: Dense = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if x.is_empty() || x[0].is_empty() {
        return m;
    }
    let xt = transpose(x);
    let inv = gj_inverse(&matmul(&xt, x)).expect("full column rank");
    let h = matmul(&matmul(x, &inv), &xt);
    for i in 0..n {
        for j in 0..n {
            m[i][j] -= h[i][j];
        }
    }
    m
}

pub fn hstack(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().chain(s).copied().collect())
        .collect()
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random dataset whose controls start with an intercept when `q > 0`.
pub fn random_dataset(seed: u64, n: usize, p: usize, q: usize) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix64::from_col_major(n, p, normals(&mut rng, n * p));
    let mut bdata = normals(&mut rng, n * q);
    if q > 0 {
        bdata[..n].iter_mut().for_each(|v| *v = 1.0);
    }
    let y = normals(&mut rng, n);
    let controls = if q == 0 {
        Controls::None
    } else {
        Controls::Dense(Matrix64::from_col_major(n, q, bdata))
    };
    Dataset64::new(y, a, controls).unwrap()
}
