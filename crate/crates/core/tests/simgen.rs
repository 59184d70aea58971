use nalgebra::DMatrix;
use proptest::prelude::*;
use trader_core::simgen::*;
use trader_core::Dataset;

fn residual_sd(d: &Dataset, coef: &ndarray::Array1<f64>, intercept: f64) -> f64 {
    let r = d.y() - &d.x().dot(coef) - intercept;
    (r.mapv(|v| v * v).sum() / r.len() as f64).sqrt()
}

#[test]
fn target_rows_follow_the_ar1_law() {
    let spec = SimSpec { n0: 100_000, p: 20, s: 4, k: 0, ..SimSpec::new(Setting::I) };
    let inst = gen_setting1::<f64>(&spec, 1).unwrap();
    let x = inst.target.x();
    let n = x.nrows() as f64;
    let cov = x.t().dot(x) / n;
    let a = ar1_covariance::<f64>(20, 0.5).unwrap();
    let worst = (&cov - &a).mapv(f64::abs).iter().copied().fold(0.0, f64::max);
    assert!(worst < 0.02, "max deviation {worst}");
}

#[test]
fn responses_carry_the_stated_noise() {
    let spec = SimSpec { n0: 100_000, nk: 100_000, p: 5, s: 1, k_a: Some(0), ..SimSpec::new(Setting::II).with_k(1) };
    let inst = gen_setting2::<f64>(&spec, 2).unwrap();
    let sd = residual_sd(&inst.target, &inst.beta_true, 0.0);
    assert!((sd - 1.0).abs() < 0.05);
    let sd = residual_sd(&inst.sources[0], &inst.omega_true[0], 0.5);
    assert!((sd - 1.0).abs() < 0.05);
}

#[test]
fn rademacher_perturbations_are_balanced() {
    let spec = SimSpec { n0: 1, nk: 1, p: 100_000, s: 10, h: 15.0, ..SimSpec::new(Setting::I).with_k(1) };
    let inst = gen_setting1::<f64>(&spec, 3).unwrap();
    let signs = (&inst.omega_true[0] - &inst.beta_true).mapv(|v| v * 100_000.0 / 15.0);
    assert!(signs.iter().all(|v| (v.abs() - 1.0).abs() < 1e-9));
    assert!(signs.mean().unwrap().abs() < 0.02);
}

#[test]
fn all_informative_setting2_matches_setting1_law() {
    let spec = SimSpec { k_a: Some(10), ..SimSpec::new(Setting::II) };
    let inst = gen_setting2::<f64>(&spec, 4).unwrap();
    for w in &inst.omega_true {
        let d = w - &inst.beta_true;
        assert!(d.iter().all(|v| (v.abs() - 0.075).abs() < 1e-15));
    }
}

#[test]
fn uncorrelated_dense_coefficients() {
    let spec = SimSpec {
        n0: 2,
        nk: 2,
        p: 10_000,
        correlations: vec![0.0; 3],
        scale_ratios: vec![1.0; 3],
        ..SimSpec::new(Setting::III).with_k(3)
    };
    let inst = gen_setting3::<f64>(&spec, 5).unwrap();
    let b = &inst.beta_true;
    for w in &inst.omega_true {
        let r = b.dot(w) / (b.dot(b) * w.dot(w)).sqrt();
        assert!(r.abs() < 0.05, "r = {r}");
    }
}

#[test]
fn dense_source_norms_match_their_scales() {
    let ratios = GRADED_SCALE_RATIOS.to_vec();
    for coupling in [SourceCoupling::Independent, SourceCoupling::ConditionalOnTarget] {
        let spec = SimSpec {
            n0: 2,
            nk: 2,
            scale_ratios: ratios.clone(),
            correlations: vec![0.3; 10],
            source_coupling: coupling,
            ..SimSpec::new(Setting::III)
        };
        let mut sq = [0.0; 10];
        let mut sq_t = 0.0;
        let reps = 200;
        for r in 0..reps {
            let inst = gen_setting3::<f64>(&spec, r).unwrap();
            for (k, w) in inst.omega_true.iter().enumerate() {
                sq[k] += w.dot(w) / reps as f64;
            }
            sq_t += inst.beta_true.dot(&inst.beta_true) / reps as f64;
        }
        for k in 0..10 {
            let alpha = 1.0 / ratios[k];
            assert!((sq[k] / (alpha * alpha) - 1.0).abs() < 0.05, "{coupling:?} source {k}");
        }
        assert!((sq_t - 1.0).abs() < 0.05);
    }
}

#[test]
fn conditional_coupling_keeps_pairwise_correlation() {
    let spec = SimSpec {
        n0: 2,
        nk: 2,
        p: 20_000,
        correlations: vec![0.7; 10],
        scale_ratios: GRADED_SCALE_RATIOS.to_vec(),
        source_coupling: SourceCoupling::ConditionalOnTarget,
        ..SimSpec::new(Setting::III)
    };
    let inst = gen_setting3::<f64>(&spec, 6).unwrap();
    let b = &inst.beta_true;
    for w in &inst.omega_true {
        let r = b.dot(w) / (b.dot(b) * w.dot(w)).sqrt();
        assert!((r - 0.7).abs() < 0.02, "r = {r}");
    }
}

proptest! {
    #[test]
    fn dense_covariance_psd_check_matches_eigenvalues(
        rho in proptest::collection::vec(-1.0f64..1.0, 1..6),
        ratios in proptest::collection::vec(0.5f64..2.0, 6),
    ) {
        let k = rho.len();
        let alpha_s: Vec<f64> = ratios[..k].iter().map(|r| 1.0 / r).collect();
        let c = setting3_covariance(1.0, &alpha_s, &rho, 200);
        prop_assert_eq!(&c, &c.t().to_owned());
        let ss: f64 = rho.iter().map(|r| r * r).sum();
        prop_assume!((ss - 1.0).abs() > 1e-6);
        let m = DMatrix::from_fn(k + 1, k + 1, |i, j| c[[i, j]]);
        let min_eig = m.symmetric_eigenvalues().min();
        prop_assert_eq!(setting3_is_psd(&rho), min_eig >= -1e-12);
    }
}
