mod common;

use ndarray::{array, Array1, Array2};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, InverseGamma};
use trader_core::guide::GuideSet;
use trader_core::rng;
use trader_core::sampler::*;
use trader_core::{Dataset, SourceEstimate, TraderConfig};

fn random_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(seed, &[]);
    Array2::from_shape_simple_fn((n, p), || r.random::<f64>() * 2.0 - 1.0)
}

fn guide(p: usize, tau: f64, sources: Array2<f64>) -> GuideSet<f64> {
    let k = sources.nrows();
    let mut g = GuideSet::empty(p, tau, 1.0);
    g.omega_tilde = sources;
    g.theta = Array1::from_elem(k, 0.7);
    g
}

fn state_for(g: &GuideSet<f64>, lambda2: Array1<f64>, sigma2: f64) -> ChainState<f64> {
    let k1 = g.n_sources() + 1;
    ChainState {
        beta: Array1::zeros(g.p()),
        intercept: None,
        sigma2,
        aux_nu: Array1::ones(lambda2.len()),
        lambda2,
        eta: Array1::from_shape_fn(k1, |i| (i + 1) as f64 / (k1 * (k1 + 1) / 2) as f64),
    }
}

#[test]
fn orthogonal_design_mean_is_convex_combination() {
    // columns of a Sylvester-Hadamard matrix: X'X = 8 I exactly
    let h2 = array![[1.0, 1.0], [1.0, -1.0]];
    let h4 = ndarray::linalg::kron(&h2, &h2);
    let h8 = ndarray::linalg::kron(&h2, &h4);
    let x = h8.slice(ndarray::s![.., 1..5]).to_owned();
    let y = array![1.0, -0.3, 2.2, 0.7, -1.5, 0.1, 0.9, -0.4];
    let n0 = 8;
    let g = guide(4, 0.3, array![[0.5, -0.2, 0.0, 1.0], [0.1, 0.4, -0.3, 0.2]]);
    let s = state_for(&g, array![0.2, 1.0, 7.5, 0.01], 1.3);
    let d = Design::new(x.clone(), y.clone(), false).unwrap();
    let mean = beta_conditional_mean(&s, &g, &d).unwrap();
    let m = prior_mean(&g, &s.eta);
    let b_ols = common::ols(&x, &y);
    for j in 0..4 {
        let k = kappa(g.tau, s.lambda2[j].sqrt(), n0);
        let expect = (1.0 - k) * b_ols[j] + k * m[j];
        assert!((mean[j] - expect).abs() <= 1e-8, "coordinate {j}");
    }
}

#[test]
fn cholesky_mean_matches_dense_oracle() {
    let (n, p) = (12, 7);
    let x = random_matrix(n, p, 1);
    let y = Array1::from_shape_fn(n, |i| (i as f64).sin());
    let g = guide(p, 0.4, random_matrix(2, p, 2));
    let s = state_for(&g, Array1::from_shape_fn(p, |j| 0.1 + j as f64), 0.8);
    let d = Design::new(x.clone(), y.clone(), false).unwrap();
    let m = prior_mean(&g, &s.eta);
    let v = s.lambda2.mapv(|l| l * g.tau * g.tau);
    let (oracle, _) = common::dense_conditional(&x, &y, &m, &v, s.sigma2);
    let mean = beta_conditional_mean(&s, &g, &d).unwrap();
    for j in 0..p {
        assert!((mean[j] - oracle[j]).abs() < 1e-10);
    }
}

#[test]
fn woodbury_mean_matches_cholesky_mean() {
    let (n, p) = (15, 40);
    let x = random_matrix(n, p, 3);
    let y = Array1::from_shape_fn(n, |i| 0.3 * i as f64 - 2.0);
    let g = guide(p, 0.2, random_matrix(3, p, 4));
    let s = state_for(&g, Array1::from_shape_fn(p, |j| 0.05 + 0.3 * j as f64), 0.6);
    let d = Design::new(x, y, false).unwrap();
    let a = beta_conditional_mean(&s, &g, &d).unwrap();
    let b = beta_conditional_mean_woodbury(&s, &g, &d).unwrap();
    for j in 0..p {
        assert!((a[j] - b[j]).abs() <= 1e-9 * (1.0 + a[j].abs()), "coordinate {j}");
    }
}

#[test]
fn both_beta_samplers_draw_the_dense_conditional() {
    let (n, p) = (4, 6);
    let x = random_matrix(n, p, 5);
    let y = array![0.5, -1.0, 2.0, 0.3];
    let g = guide(p, 0.7, random_matrix(1, p, 6));
    let s = state_for(&g, Array1::from_shape_fn(p, |j| 0.5 + 0.5 * j as f64), 0.9);
    let d = Design::new(x.clone(), y.clone(), false).unwrap();
    let m = prior_mean(&g, &s.eta);
    let v = s.lambda2.mapv(|l| l * g.tau * g.tau);
    let (mu, cov) = common::dense_conditional(&x, &y, &m, &v, s.sigma2);
    let draws = 40_000;
    for (i, method) in [BetaMethod::Cholesky, BetaMethod::Woodbury].into_iter().enumerate() {
        let mut r = rng::stream(7, &[i as u64]);
        let mut cols = vec![Vec::with_capacity(draws); p];
        for _ in 0..draws {
            let b = sample_beta_with(method, &s, &g, &d, &mut r).unwrap();
            for j in 0..p {
                cols[j].push(b[j]);
            }
        }
        for j in 0..p {
            let se = (cov[(j, j)] / draws as f64).sqrt();
            assert!((common::mean(&cols[j]) - mu[j]).abs() < 4.0 * se, "{method:?} mean {j}");
            let var = common::variance(&cols[j]);
            // sd of a sample variance of Gaussian draws is var * sqrt(2 / (N - 1))
            let var_se = cov[(j, j)] * (2.0 / (draws - 1) as f64).sqrt();
            assert!((var - cov[(j, j)]).abs() < 4.0 * var_se, "{method:?} variance {j}");
        }
    }
}

#[test]
fn no_rows_draws_from_the_prior() {
    let p = 3;
    let g = guide(p, 0.5, array![[1.0, -2.0, 0.5]]);
    let s = state_for(&g, array![1.0, 4.0, 0.25], 2.0);
    let d = Design::empty(p);
    let m = prior_mean(&g, &s.eta);
    let mut r = rng::stream(8, &[]);
    let draws = 40_000;
    let mut cols = vec![Vec::new(); p];
    for _ in 0..draws {
        let b = sample_beta_conditional(&s, &g, &d, &mut r).unwrap();
        for j in 0..p {
            cols[j].push(b[j]);
        }
    }
    for j in 0..p {
        let var = s.sigma2 * g.tau * g.tau * s.lambda2[j];
        assert!((common::mean(&cols[j]) - m[j]).abs() < 4.0 * (var / draws as f64).sqrt());
        assert!((common::variance(&cols[j]) / var - 1.0).abs() < 0.03);
    }
}

#[test]
fn huge_prior_variance_recovers_ols() {
    let (n, p) = (30, 5);
    let x = random_matrix(n, p, 9);
    let y = Array1::from_shape_fn(n, |i| ((i * 7) % 5) as f64 - 2.0);
    let g = guide(p, 1e4, random_matrix(1, p, 10));
    let s = state_for(&g, Array1::ones(p), 1.0);
    let d = Design::new(x.clone(), y.clone(), false).unwrap();
    let mean = beta_conditional_mean(&s, &g, &d).unwrap();
    let b = common::ols(&x, &y);
    for j in 0..p {
        assert!((mean[j] - b[j]).abs() <= 1e-4 * b[j].abs().max(1e-3));
    }
}

#[test]
fn zero_residual_local_scale_is_inverse_gamma_one_one() {
    let g = GuideSet::<f64>::empty(1, 1.0, 1.0);
    let s = state_for(&g, array![1.0], 1.0);
    let mut r = rng::stream(0, &[]);
    let mut xs: Vec<f64> = (0..100_000)
        .map(|_| sample_lambda_conditional(&s, &g, &mut r).unwrap().0[0])
        .collect();
    let ig = InverseGamma::new(1.0, 1.0).unwrap();
    let pv = common::ks_pvalue(&mut xs, |x| ig.cdf(x));
    assert!(pv > 0.01, "p = {pv}");
}

fn linear_data(n: usize, beta: &[f64], noise: f64, seed: u64, intercept: Option<f64>) -> Dataset {
    let p = beta.len();
    let mut r = rng::stream(seed, &[]);
    let x = Array2::from_shape_simple_fn((n, p), || trader_core::Real::sample_standard_normal(&mut r));
    let b = Array1::from(beta.to_vec());
    let mut y = x.dot(&b);
    let a = intercept.unwrap_or(0.0);
    y.mapv_inplace(|v| v + a + noise * <f64 as trader_core::Real>::sample_standard_normal(&mut r));
    Dataset::new(x, y, intercept.is_some()).unwrap()
}

fn quick(seed: u64) -> TraderConfig {
    TraderConfig {
        n_warmup: 300,
        n_samples: 600,
        n_chains: 2,
        seed,
        ..Default::default()
    }
}

#[test]
fn noise_variance_concentrates_on_truth() {
    let data = linear_data(500, &[1.0, -0.5, 0.0, 0.25, 0.0], 1.0, 12, None);
    let fit = fit_horseshoe(&data, &quick(1)).unwrap();
    let all: Vec<f64> = fit.chains.iter().flat_map(|c| c.sigma2.iter().copied()).collect();
    assert!((common::mean(&all) - 1.0).abs() < 0.2);
}

#[test]
fn low_dimensional_horseshoe_intervals() {
    let data = linear_data(200, &[2.0, 0.0, 0.0, 0.0, 0.0], 1.0, 13, None);
    let fit = fit_horseshoe(&data, &quick(2)).unwrap();
    let c = &fit.summary.coefficients;
    assert!(c[0].lower <= 2.0 && 2.0 <= c[0].upper);
    for cj in &c[1..] {
        assert!(cj.lower <= 0.0 && 0.0 <= cj.upper);
    }
}

#[test]
fn pure_noise_intervals_mostly_contain_zero() {
    let (mut hit, mut total) = (0, 0);
    for rep in 0..50 {
        let data = linear_data(60, &[0.0; 10], 1.0, 100 + rep, None);
        let cfg = TraderConfig { n_chains: 1, n_warmup: 200, n_samples: 400, ..quick(rep) };
        let fit = fit_horseshoe(&data, &cfg).unwrap();
        for c in &fit.summary.coefficients {
            total += 1;
            hit += usize::from(c.lower <= 0.0 && 0.0 <= c.upper);
        }
    }
    assert!(hit as f64 >= 0.9 * total as f64, "{hit}/{total}");
}

#[test]
fn no_sources_is_bitwise_horseshoe() {
    let data = linear_data(40, &[1.0, 0.0, 0.5, 0.0], 0.5, 14, Some(0.3));
    let cfg = quick(3);
    let a = fit_horseshoe(&data, &cfg).unwrap();
    let b = fit_trader(&data, &[], &cfg).unwrap();
    assert_eq!(a.chains, b.chains);
    assert_eq!(a.summary, b.summary);
}

#[test]
fn chains_are_deterministic_per_seed_and_id() {
    let data = linear_data(30, &[1.0, 0.0, -1.0], 1.0, 15, None);
    let g = GuideSet::empty(3, 0.3, 1.0);
    let cfg = quick(4);
    let a = run_chain(&data, &g, &cfg, 0, 99).unwrap();
    let b = run_chain(&data, &g, &cfg, 0, 99).unwrap();
    let c = run_chain(&data, &g, &cfg, 1, 99).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.beta, c.beta);
    assert_eq!(a.n_draws(), 600);
}

fn sources_for(data: &Dataset, k: usize, seed: u64) -> Vec<SourceEstimate> {
    let mut r = rng::stream(seed, &[]);
    (0..k)
        .map(|i| {
            let w = Array1::from_shape_fn(data.p(), |j| if j < 2 { 1.0 } else { 0.0 } + 0.2 * (r.random::<f64>() - 0.5));
            SourceEstimate::new(format!("s{i}"), w, None).unwrap()
        })
        .collect()
}

#[test]
fn power_of_two_source_scaling_leaves_draws_bitwise_unchanged() {
    let data = linear_data(45, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1.0, 16, None);
    let src = sources_for(&data, 3, 17);
    let cfg = quick(5);
    let base = fit_trader(&data, &src, &cfg).unwrap();
    let scaled: Vec<SourceEstimate> = src
        .iter()
        .zip([0.25, 8.0, 1024.0])
        .map(|(s, c)| SourceEstimate::new(s.id.clone(), s.omega_hat.mapv(|v| v * c), None).unwrap())
        .collect();
    let other = fit_trader(&data, &scaled, &cfg).unwrap();
    assert_eq!(base.guide.omega_tilde, other.guide.omega_tilde);
    assert_eq!(base.guide.theta, other.guide.theta);
    assert_eq!(base.chains, other.chains);
}

#[test]
fn arbitrary_source_scaling_leaves_draws_numerically_unchanged() {
    let data = linear_data(45, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1.0, 18, None);
    let src = sources_for(&data, 2, 19);
    let cfg = TraderConfig { n_chains: 1, ..quick(6) };
    let base = fit_trader(&data, &src, &cfg).unwrap();
    let scaled: Vec<SourceEstimate> = src
        .iter()
        .zip([0.3, 7.1])
        .map(|(s, c)| SourceEstimate::new(s.id.clone(), s.omega_hat.mapv(|v| v * c), None).unwrap())
        .collect();
    let other = fit_trader(&data, &scaled, &cfg).unwrap();
    let diff = (&base.chains[0].beta - &other.chains[0].beta).mapv(f64::abs);
    let worst = diff.iter().copied().fold(0.0, f64::max);
    assert!(worst < 1e-8, "max deviation {worst}");
}

#[test]
fn trader_draws_respect_invariants() {
    let data = linear_data(60, &[1.0, 1.0, 0.0, 0.0, 0.0], 1.0, 20, Some(0.5));
    let src = sources_for(&data, 4, 21);
    let fit = fit_trader(&data, &src, &quick(7)).unwrap();
    for c in &fit.chains {
        c.validate().unwrap();
        assert!(c.intercept.is_some());
        assert_eq!(c.eta.ncols(), 5);
    }
    assert_eq!(fit.n_train, 40);
    let diag = diagnostics(&fit.chains).unwrap();
    assert!(diag.iter().any(|d| d.parameter == "eta_1"));
}

#[test]
fn single_precision_chain_runs() {
    let data = linear_data(40, &[1.0, 0.0, -1.0], 1.0, 22, None);
    let x: Array2<f32> = data.x().mapv(|v| v as f32);
    let y: Array1<f32> = data.y().mapv(|v| v as f32);
    let d32 = trader_core::data::Dataset::new(x, y, false).unwrap();
    let fit = fit_horseshoe(&d32, &quick(8)).unwrap();
    let c = &fit.summary.coefficients;
    assert!((c[0].mean - 1.0).abs() < 0.3 && (c[2].mean + 1.0).abs() < 0.3);
}
