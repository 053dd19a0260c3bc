mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustse::{estimate_all, Controls, Dataset64, FitOptions, Matrix64, Method, Truth};

/// Base data plus `extra` rows, each carrying its own dummy control.
fn with_isolated_rows(base: &Dataset64, extra: usize, seed: u64) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.n();
    let total = n + extra;
    let p = base.p();
    let b = base.controls().to_dense(n);
    let q = b.ncols();
    let a = Matrix64::from_fn(total, p, |i, j| {
        if i < n {
            base.focal()[(i, j)]
        } else {
            rng.gen_range(-3.0..3.0)
        }
    });
    let b_new = Matrix64::from_fn(total, q + extra, |i, j| match (i < n, j < q) {
        (true, true) => b[(i, j)],
        (true, false) => 0.0,
        (false, true) => b[((i * 7) % n, j)],
        (false, false) => f64::from(u8::from(i - n == j - q)),
    });
    let mut y = base.y().to_vec();
    y.extend((0..extra).map(|k| 10.0 * (k as f64 + 1.5)));
    Dataset64::new(y, a, Controls::Dense(b_new)).unwrap()
}

fn sigma2(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + (i % 4) as f64 * 0.25).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_leverage_rows_change_nothing(seed in any::<u64>(), extra in 1usize..4, q in 1usize..3) {
        let base = random_dataset(seed, 10, 1, q);
        let grown = with_isolated_rows(&base, extra, seed ^ 0x5eed);
        let n = base.n();
        let mut s2 = sigma2(n);
        let base = base.clone().with_truth(Truth { beta: vec![0.0; 1 + q], sigma2: s2.clone() }).unwrap();
        s2.extend(vec![1.0; extra]);
        let grown = grown.with_truth(Truth { beta: vec![0.0; 1 + q + extra], sigma2: s2 }).unwrap();

        let opts = FitOptions::default();
        let a = estimate_all(&base, &Method::ALL, &opts).unwrap();
        let b = estimate_all(&grown, &Method::ALL, &opts).unwrap();
        prop_assert_eq!(b.fit.design.n_dropped(), extra);
        prop_assert!((a.fit.alpha_hat()[0] - b.fit.alpha_hat()[0]).abs() < 1e-10);
        for m in Method::ALL {
            match (&a.results[&m], &b.results[&m]) {
                (Ok(x), Ok(y)) => {
                    let (u, v) = (x.omega[(0, 0)], y.omega[(0, 0)]);
                    prop_assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()), "{} {} {}", m, u, v);
                }
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{} feasibility differs: {:?} {:?}", m, x.is_ok(), y.is_ok()),
            }
        }
    }
}
