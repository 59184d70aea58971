use trader_core::evalbench::*;
use trader_core::simgen::*;
use trader_core::TraderConfig;

fn tiny(setting: Setting) -> SimSpec {
    SimSpec {
        n0: 40,
        nk: 40,
        p: 20,
        s: 4,
        h: 2.0,
        seed: 11,
        correlations: vec![0.3; 2],
        scale_ratios: vec![1.0; 2],
        ..SimSpec::new(setting).with_k(2)
    }
}

fn opts(methods: Vec<Method>, reps: usize) -> BenchOptions {
    let cfg = TraderConfig { n_warmup: 100, n_samples: 150, n_chains: 2, ..Default::default() };
    BenchOptions::new(methods, reps, cfg)
}

#[test]
fn one_horseshoe_replication_gives_three_strata() {
    let r = run_benchmark(&tiny(Setting::I), &opts(vec![Method::Horseshoe], 1)).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.failures.is_empty());
    let strata: Vec<Stratum> = r.rows.iter().map(|m| m.stratum).collect();
    assert_eq!(strata, [Stratum::All, Stratum::Signal, Stratum::Noise]);
    assert_eq!(r.draws_checked, 300);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = tiny(Setting::II);
    let mut a = opts(vec![Method::Trader, Method::Horseshoe], 3);
    a.jobs = 1;
    let mut b = a.clone();
    b.jobs = 3;
    let ra = run_benchmark(&spec, &a).unwrap();
    let rb = run_benchmark(&spec, &b).unwrap();
    assert_eq!(ra.rows, rb.rows);
    assert_eq!(ra.rows.len(), 3 * 2 * 3);
}

#[test]
fn injected_failures_are_excluded_and_counted() {
    let mut o = opts(vec![Method::Horseshoe], 3);
    o.inject_failures = vec![1];
    let r = run_benchmark(&tiny(Setting::I), &o).unwrap();
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].replication, 1);
    assert!(r.rows.iter().all(|m| m.replication != 1));
    assert_eq!(r.rows.len(), 6);
}

#[test]
fn dense_setting_reports_only_the_all_stratum() {
    let r = run_benchmark(&tiny(Setting::III), &opts(vec![Method::Trader], 2)).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|m| m.stratum == Stratum::All && m.tpr.is_none()));
}

#[test]
fn fewer_sources_reuse_the_same_data() {
    // with substreams per source, K = 1 sees the first source of the K = 2 instance
    let spec = tiny(Setting::I);
    let seed = replication_seed(spec.seed, 0);
    let a = gen_setting1::<f64>(&spec, seed).unwrap();
    let b = gen_setting1::<f64>(&spec.clone().with_k(1), seed).unwrap();
    assert_eq!(a.target, b.target);
    assert_eq!(a.sources[0], b.sources[0]);
}
