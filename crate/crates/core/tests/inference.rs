use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robustse::inference::two_sided_critical_value;
use robustse::{t_test, Controls, Dataset64, FitOptions, Matrix64, Method, ModelFit64};

/// `2 (1 - Phi(z))` by composite Simpson integration of the density on `[0, z]`.
fn simpson_two_sided_p(z: f64) -> f64 {
    let steps = 20_000;
    let h = z / steps as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(0.0) + phi(z);
    for k in 1..steps {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * phi(k as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn boundary_p_value_matches_quadrature() {
    let t = t_test(1.959964, 0.0, 1.0).unwrap();
    assert!((t.p_value - simpson_two_sided_p(1.959964)).abs() < 1e-10);
    assert!((t.p_value - 0.05).abs() < 1e-6);
    for z in [0.3, 1.0, 2.5, 4.0] {
        let p = t_test(z, 0.0, 1.0).unwrap().p_value;
        assert!((p - simpson_two_sided_p(z)).abs() < 1e-10);
    }
}

#[test]
fn p_value_decreases_in_statistic() {
    let mut last = 1.0;
    for k in 0..60 {
        let p = t_test(k as f64 * 0.1, 0.0, 1.0).unwrap().p_value;
        assert!(p <= last);
        last = p;
    }
}

#[test]
fn oracle_test_has_nominal_size() {
    let n = 500;
    let reps = 10_000;
    let crit = two_sided_critical_value(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut rejections = 0;
    for _ in 0..reps {
        let a = draw(n);
        let eps = draw(n);
        let y: Vec<f64> = a.iter().zip(&eps).map(|(a, e)| 1.0 + a + e).collect();
        let data = Dataset64::new(
            y,
            Matrix64::from_col_major(n, 1, a),
            Controls::Dense(Matrix64::from_col_major(n, 1, vec![1.0; n])),
        )
        .unwrap();
        let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
        let omega = fit.covariance(Method::Oracle, Some(&vec![1.0; n])).unwrap().omega[(0, 0)];
        let t = (fit.alpha_hat()[0] - 1.0) / omega.sqrt();
        if t.abs() > crit {
            rejections += 1;
        }
    }
    let size = rejections as f64 / reps as f64;
    assert!((0.04..=0.06).contains(&size), "size {size}");
}
