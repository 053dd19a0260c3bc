mod common;

use common::*;
use robustse::{Controls, Dataset64, FitOptions, Matrix64, Method, ModelFit64};

struct Design {
    x: Dense,
    a: Matrix64,
    b: Matrix64,
    sigma2: Vec<f64>,
    beta: Vec<f64>,
}

fn design(n: usize, q: usize) -> Design {
    let a: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 / 3.0 - 1.5).collect();
    let mut cols = vec![vec![1.0; n]];
    if q > 1 {
        cols.push((0..n).map(|i| ((i * i + 1) % 5) as f64 * 0.4).collect());
    }
    let sigma2: Vec<f64> = (0..n).map(|i| 0.5 + 0.3 * i as f64).collect();
    let beta: Vec<f64> = [1.0, 0.5, -0.3][..1 + q].to_vec();
    let b = Matrix64::from_columns(n, &cols);
    let a = Matrix64::from_columns(n, &[a]);
    let x = to_dense(&a.hstack(&b));
    Design {
        x,
        a,
        b,
        sigma2,
        beta,
    }
}

/// Averages of the weights and of the covariance estimate over all sign
/// patterns of `eps_i = sigma_i * s_i`.
fn enumerate(d: &Design, method: Method) -> (Vec<f64>, f64) {
    let n = d.x.len();
    let mean_y: Vec<f64> = d
        .x
        .iter()
        .map(|r| r.iter().zip(&d.beta).map(|(a, b)| a * b).sum())
        .collect();
    let mut w_sum = vec![0.0; n];
    let mut omega_sum = 0.0;
    let count = 1usize << n;
    for mask in 0..count {
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                mean_y[i] + s * d.sigma2[i].sqrt()
            })
            .collect();
        let data = Dataset64::new(y, d.a.clone(), Controls::Dense(d.b.clone())).unwrap();
        let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
        let w = fit.weights(method, None).unwrap();
        for (acc, wi) in w_sum.iter_mut().zip(&w.w) {
            *acc += wi;
        }
        omega_sum += fit.covariance(method, None).unwrap().omega[(0, 0)];
    }
    let c = count as f64;
    (w_sum.iter().map(|v| v / c).collect(), omega_sum / c)
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn configurations() -> Vec<Design> {
    [(5, 1), (5, 2), (6, 1), (6, 2)]
        .into_iter()
        .map(|(n, q)| design(n, q))
        .collect()
}

#[test]
fn crossfit_weights_average_to_variances() {
    for d in configurations() {
        let (w, _) = enumerate(&d, Method::LooCrossfit);
        assert!(max_err(&w, &d.sigma2) < 1e-12, "{w:?} vs {:?}", d.sigma2);
    }
}

/// `rank(M o M) <= k (k + 1) / 2` with `k = n - r`, so the system can only be
/// solvable when that bound reaches `n`.
fn hadamard_can_exist(d: &Design) -> bool {
    let k = d.x.len() - d.x[0].len();
    k * (k + 1) / 2 >= d.x.len()
}

#[test]
fn hrk_weights_average_to_variances() {
    for d in configurations() {
        if !hadamard_can_exist(&d) {
            let data = Dataset64::new(vec![0.0; d.x.len()], d.a.clone(), Controls::Dense(d.b.clone()))
                .unwrap();
            let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
            assert!(matches!(
                fit.weights(Method::Hrk, None),
                Err(robustse::Error::HadamardSingular { .. })
            ));
            continue;
        }
        let (w, _) = enumerate(&d, Method::Hrk);
        assert!(max_err(&w, &d.sigma2) < 1e-12, "{w:?} vs {:?}", d.sigma2);
    }
}

#[test]
fn hc0_weights_average_to_hadamard_image() {
    for d in configurations() {
        let m = explicit_annihilator(&d.x);
        let expected: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(&d.sigma2).map(|(mij, s)| mij * mij * s).sum())
            .collect();
        let (w, _) = enumerate(&d, Method::Hc0);
        assert!(max_err(&w, &expected) < 1e-12);
        assert!(max_err(&w, &d.sigma2) > 1e-3);
    }
}

#[test]
fn crossfit_sandwich_averages_to_true_covariance() {
    for d in configurations() {
        let data = Dataset64::new(vec![0.0; d.x.len()], d.a.clone(), Controls::Dense(d.b.clone()))
            .unwrap();
        let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
        let omega = fit.covariance(Method::Oracle, Some(&d.sigma2)).unwrap().omega[(0, 0)];
        let (_, mean_omega) = enumerate(&d, Method::LooCrossfit);
        assert!((mean_omega - omega).abs() < 1e-12, "{mean_omega} vs {omega}");
    }
}

#[test]
fn hc2_unbiased_only_under_homoskedasticity() {
    let mut d = design(6, 2);
    let (w, _) = enumerate(&d, Method::Hc2);
    assert!(max_err(&w, &d.sigma2) > 1e-3);
    d.sigma2 = vec![0.7; 6];
    let (w, _) = enumerate(&d, Method::Hc2);
    assert!(max_err(&w, &d.sigma2) < 1e-12);
}
