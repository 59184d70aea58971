//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

/// Dense Gaussian full conditional of beta for `y = X beta + e`,
/// `e ~ N(0, s2 I)`, `beta ~ N(m, s2 diag(v))`, by explicit matrix inversion.
pub fn dense_conditional(
    x: &Array2<f64>,
    y: &Array1<f64>,
    m: &Array1<f64>,
    v: &Array1<f64>,
    s2: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let (n, p) = x.dim();
    let xm = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let yv = DVector::from_fn(n, |i, _| y[i]);
    let mv = DVector::from_fn(p, |i, _| m[i]);
    let dinv = DMatrix::from_diagonal(&DVector::from_fn(p, |i, _| 1.0 / v[i]));
    let prec = (xm.transpose() * &xm + &dinv) / s2;
    let cov = prec.try_inverse().expect("invertible precision");
    let mean = &cov * ((xm.transpose() * yv + dinv * mv) / s2);
    (mean, cov)
}

/// Ordinary least squares via the normal equations.
pub fn ols(x: &Array2<f64>, y: &Array1<f64>) -> DVector<f64> {
    let (n, p) = x.dim();
    let xm = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let yv = DVector::from_fn(n, |i, _| y[i]);
    (xm.transpose() * &xm).try_inverse().expect("full rank") * (xm.transpose() * yv)
}

/// Asymptotic Kolmogorov p-value for the one-sample statistic.
pub fn ks_pvalue(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let t = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    kolmogorov_sf(t)
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> f64 {
    let b = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|i| xs[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (var / n_batches as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}
