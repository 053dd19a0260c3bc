mod common;

use common::*;
use proptest::prelude::*;
use robustse::{
    annihilator_matrix, fit_ols, AnnihilatorSource, Controls, Dataset64, FitOptions, Matrix64,
    ModelFit64,
};

/// `(seed, n, p, q)` with at least three residual degrees of freedom.
fn dims() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1usize..4, 0usize..6, 3usize..16)
        .prop_map(|(seed, p, q, extra)| (seed, p + q + extra, p, q))
}

fn full_design(d: &Dataset64) -> Dense {
    to_dense(&d.design_matrix())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projection_identities((seed, n, p, q) in dims()) {
        let data = random_dataset(seed, n, p, q);
        let x = data.design_matrix();
        let m = annihilator_matrix(&x, AnnihilatorSource::FullX, &FitOptions::default()).unwrap().m;
        let md = to_dense(&m);
        let mm = matmul(&md, &md);
        prop_assert!(max_abs_diff(&mm, &md) < 1e-8);
        prop_assert!((m.trace() - (n - p - q) as f64).abs() < 1e-8);
        for i in 0..n {
            let ss: f64 = md[i].iter().map(|v| v * v).sum();
            prop_assert!((ss - md[i][i]).abs() < 1e-8);
        }
        prop_assert!(max_abs_diff(&md, &explicit_annihilator(&full_design(&data))) < 1e-8);
        // scaled rows m_ij / m_ii
        for i in 0..n {
            for k in 0..n {
                let s: f64 = (0..n).map(|j| md[i][j] / md[i][i] * md[k][j] / md[k][k]).sum();
                let expected = md[i][k] / (md[i][i] * md[k][k]);
                prop_assert!((s - expected).abs() < 1e-8 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn full_annihilator_from_controls((seed, n, p, q) in dims()) {
        let data = random_dataset(seed, n, p, q);
        let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
        let mx = to_dense(&fit.annihilator(AnnihilatorSource::FullX).unwrap().m);
        let mb = to_dense(&fit.annihilator(AnnihilatorSource::ControlsOnly).unwrap().m);
        let b = to_dense(&data.controls().to_dense(n));
        let mb_oracle = explicit_annihilator(&b);
        prop_assert!(max_abs_diff(&mb, &mb_oracle) < 1e-8);
        let mba = matmul(&mb_oracle, &to_dense(data.focal()));
        let h = {
            let m = explicit_annihilator(&mba);
            (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - m[i][j]).collect()).collect::<Dense>()
        };
        let expected: Dense = (0..n).map(|i| (0..n).map(|j| mb_oracle[i][j] - h[i][j]).collect()).collect();
        prop_assert!(max_abs_diff(&mx, &expected) < 1e-8);
    }

    #[test]
    fn frisch_waugh((seed, n, p, q) in dims()) {
        let data = random_dataset(seed, n, p, q);
        let opts = FitOptions::default();
        let direct = fit_ols(&data, &opts).unwrap();
        let fit = ModelFit64::new(&data, &opts).unwrap();
        for k in 0..p + q {
            prop_assert!((direct.beta_hat[k] - fit.ols.beta_hat[k]).abs() < 1e-8);
        }
        for i in 0..n {
            prop_assert!((direct.residuals[i] - fit.ols.residuals[i]).abs() < 1e-8);
            prop_assert!((direct.m_diag[i] - fit.ols.m_diag[i]).abs() < 1e-8);
        }
        prop_assert_eq!(fit.alpha_hat(), &fit.ols.beta_hat[..p]);
        // residuals orthogonal to the design
        let x = data.design_matrix();
        let xe = x.tr_matvec(&fit.ols.residuals);
        prop_assert!(xe.iter().all(|v| v.abs() < 1e-8));
        let trace: f64 = fit.ols.m_diag.iter().sum();
        prop_assert!((trace - (n - p - q) as f64).abs() < 1e-8);
    }

    #[test]
    fn miller_leave_one_out((seed, n, p, q) in dims()) {
        let data = random_dataset(seed, n, p, q);
        let fit = ModelFit64::new(&data, &FitOptions::default()).unwrap();
        let x = full_design(&data);
        for i in 0..n {
            let rows: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let xs: Dense = rows.iter().map(|&j| x[j].clone()).collect();
            let ys: Vec<f64> = rows.iter().map(|&j| data.y()[j]).collect();
            let xt = transpose(&xs);
            let Some(inv) = gj_inverse(&matmul(&xt, &xs)) else { continue };
            let xty: Vec<f64> = xt.iter().map(|r| r.iter().zip(&ys).map(|(a, b)| a * b).sum()).collect();
            let beta: Vec<f64> = inv.iter().map(|r| r.iter().zip(&xty).map(|(a, b)| a * b).sum()).collect();
            let pred: f64 = x[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
            let loo = data.y()[i] - pred;
            prop_assert!((fit.ols.loo_residuals.values[i] - loo).abs() < 1e-8 * (1.0 + loo.abs()));
        }
    }
}

#[test]
fn one_way_controls_match_dense_dummies() {
    let data = random_dataset(11, 12, 2, 0);
    let groups = robustse::Groups::new(vec![0, 0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3]).unwrap();
    let one_way = Dataset64::new(data.y().to_vec(), data.focal().clone(), Controls::OneWay(groups.clone()))
        .unwrap();
    let dense = Dataset64::new(
        data.y().to_vec(),
        data.focal().clone(),
        Controls::Dense(groups.to_dummies::<f64>()),
    )
    .unwrap();
    let opts = FitOptions::default();
    let a = ModelFit64::new(&one_way, &opts).unwrap();
    let b = ModelFit64::new(&dense, &opts).unwrap();
    for k in 0..a.ols.beta_hat.len() {
        assert!((a.ols.beta_hat[k] - b.ols.beta_hat[k]).abs() < 1e-10);
    }
    for src in [AnnihilatorSource::FullX, AnnihilatorSource::ControlsOnly] {
        let ma: Matrix64 = a.annihilator(src).unwrap().m;
        let mb: Matrix64 = b.annihilator(src).unwrap().m;
        assert!(ma.max_abs_diff(&mb) < 1e-10);
    }
}
