use rand::Rng;
use rand_distr::StandardNormal;
use robustse::{Controls, Dataset64, Groups, Matrix64, Result, Truth};

/// `lambda` that gives unit unconditional error variance when
/// `sigma^2(x) = lambda / (0.1 + x^2)` and `x ~ N(0, 1)`.
pub const LAMBDA_A: f64 = 0.319_231_616_868_391;
/// Same for `sigma^2(x) = lambda (0.1 + x^2)`.
pub const LAMBDA_B: f64 = 1.0 / 1.1;

/// Cutoff of the latent normal that switches a sparse dummy on.
pub const CJN_THRESHOLD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelVariant {
    /// Variance falls with `|x|`.
    A,
    /// Variance rises with `|x|`.
    B,
}

impl PanelVariant {
    pub fn sigma2(self, x: f64) -> f64 {
        match self {
            PanelVariant::A => LAMBDA_A / (0.1 + x * x),
            PanelVariant::B => LAMBDA_B * (0.1 + x * x),
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Focal `a ~ N(0,1)`, `q` sparse dummies `1{w > 2}`, slope one and
/// standard-normal errors. All-zero dummy columns are kept.
pub fn gen_cjn<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Result<Dataset64> {
    let a: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let mut b = Matrix64::zeros(n, q);
    for j in 0..q {
        let col = b.col_mut(j);
        for v in col.iter_mut() {
            if normal(rng) > CJN_THRESHOLD {
                *v = 1.0;
            }
        }
    }
    let eps: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let y: Vec<f64> = a.iter().zip(&eps).map(|(ai, ei)| ai + ei).collect();
    let mut beta = vec![0.0; 1 + q];
    beta[0] = 1.0;
    Dataset64::new(y, Matrix64::from_col_major(n, 1, a), Controls::Dense(b))?.with_truth(Truth {
        beta,
        sigma2: vec![1.0; n],
    })
}

/// Balanced `units x periods` panel with unit effects (all zero), focal
/// `x ~ N(0,1)` with slope one and heteroskedastic normal errors.
/// Rows are ordered unit by unit.
pub fn gen_sw<R: Rng + ?Sized>(
    units: usize,
    periods: usize,
    variant: PanelVariant,
    rng: &mut R,
) -> Result<Dataset64> {
    let n = units * periods;
    let x: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let sigma2: Vec<f64> = x.iter().map(|&xi| variant.sigma2(xi)).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&sigma2)
        .map(|(&xi, &s2)| xi + s2.sqrt() * normal(rng))
        .collect();
    let mut beta = vec![0.0; 1 + units];
    beta[0] = 1.0;
    Dataset64::new(
        y,
        Matrix64::from_col_major(n, 1, x),
        Controls::OneWay(Groups::balanced(units, periods)),
    )?
    .with_truth(Truth { beta, sigma2 })
}
