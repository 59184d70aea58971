//! Evaluation metrics and the multi-replication benchmark driver.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TraderConfig;
use crate::data::SourceEstimate;
use crate::draws::{PosteriorDraws, PosteriorSummary};
use crate::error::{Error, Result};
use crate::io;
use crate::rng::{derive_seed, TAG_REPLICATION, TAG_SOURCE_FIT, TAG_TARGET_FIT};
use crate::sampler::{fit_horseshoe, fit_trader, FitResult};
use crate::simgen::{self, Setting, SimSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Trader,
    Horseshoe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trader => "trader",
            Method::Horseshoe => "horseshoe",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trader" => Ok(Method::Trader),
            "horseshoe" => Ok(Method::Horseshoe),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    All,
    Signal,
    Noise,
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stratum::All => "all",
            Stratum::Signal => "signal",
            Stratum::Noise => "noise",
        })
    }
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub setting: u8,
    pub stratum: Stratum,
    pub replication: usize,
    pub mse: f64,
    pub avg_width: f64,
    pub coverage: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    /// `FP / (FP + FN)`.
    pub fpr: Option<f64>,
    /// Set when `FP + FN = 0` and `fpr` was reported as 0.
    pub fpr_degenerate: Option<bool>,
    /// `FP / (FP + TN)`.
    pub fpr_conventional: Option<f64>,
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{what}: length mismatch ({a} vs {b})")));
    }
    Ok(())
}

/// `(1/p) sum_j (mean_j - truth_j)^2`
pub fn estimation_mse(post_mean: ArrayView1<'_, f64>, beta_true: ArrayView1<'_, f64>) -> Result<f64> {
    let idx: Vec<usize> = (0..beta_true.len()).collect();
    estimation_mse_on(post_mean, beta_true, &idx)
}

/// MSE restricted to the coordinates in `idx`.
pub fn estimation_mse_on(
    post_mean: ArrayView1<'_, f64>,
    beta_true: ArrayView1<'_, f64>,
    idx: &[usize],
) -> Result<f64> {
    check_len(post_mean.len(), beta_true.len(), "mse")?;
    if idx.is_empty() {
        return Err(Error::invalid("mse over an empty index set"));
    }
    let ss: f64 = idx.iter().map(|&j| (post_mean[j] - beta_true[j]).powi(2)).sum();
    Ok(ss / idx.len() as f64)
}

/// `(coverage, avg_width)` over all coordinates.
pub fn interval_metrics(summary: &PosteriorSummary<f64>, beta_true: ArrayView1<'_, f64>) -> Result<(f64, f64)> {
    let idx: Vec<usize> = (0..beta_true.len()).collect();
    interval_metrics_on(summary, beta_true, &idx)
}

pub fn interval_metrics_on(
    summary: &PosteriorSummary<f64>,
    beta_true: ArrayView1<'_, f64>,
    idx: &[usize],
) -> Result<(f64, f64)> {
    check_len(summary.p(), beta_true.len(), "interval metrics")?;
    if idx.is_empty() {
        return Err(Error::invalid("interval metrics over an empty index set"));
    }
    let mut covered = 0usize;
    let mut width = 0.0;
    for &j in idx {
        let c = &summary.coefficients[j];
        if c.lower <= beta_true[j] && beta_true[j] <= c.upper {
            covered += 1;
        }
        width += c.upper - c.lower;
    }
    let m = idx.len() as f64;
    Ok((covered as f64 / m, width / m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMetrics {
    pub tpr: f64,
    pub tnr: f64,
    pub fpr: f64,
    pub fpr_degenerate: bool,
    pub fpr_conventional: f64,
}

/// Rates for the rule "selected iff the credible interval excludes zero".
pub fn selection_metrics(summary: &PosteriorSummary<f64>, beta_true: ArrayView1<'_, f64>) -> Result<SelectionMetrics> {
    check_len(summary.p(), beta_true.len(), "selection metrics")?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (c, &b) in summary.coefficients.iter().zip(beta_true) {
        match (b != 0.0, c.selected) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fn_ == 0 {
        return Err(Error::invalid("TPR undefined: truth has no nonzero coefficient"));
    }
    if tn + fp == 0 {
        return Err(Error::invalid("TNR undefined: truth has no zero coefficient"));
    }
    let degenerate = fp + fn_ == 0;
    Ok(SelectionMetrics {
        tpr: tp as f64 / (tp + fn_) as f64,
        tnr: tn as f64 / (tn + fp) as f64,
        fpr: if degenerate { 0.0 } else { fp as f64 / (fp + fn_) as f64 },
        fpr_degenerate: degenerate,
        fpr_conventional: fp as f64 / (fp + tn) as f64,
    })
}

/// Metric rows for one fitted method on one replication.
pub fn method_reports(
    method: Method,
    setting: Setting,
    replication: usize,
    summary: &PosteriorSummary<f64>,
    beta_true: ArrayView1<'_, f64>,
) -> Result<Vec<MetricsReport>> {
    let p = beta_true.len();
    let mean = summary.means();
    let all: Vec<usize> = (0..p).collect();
    let mut strata = vec![(Stratum::All, all)];
    // the dense design has no signal/noise split and no selection truth
    let sparse = setting != Setting::III;
    if sparse {
        let (sig, noise): (Vec<usize>, Vec<usize>) = (0..p).partition(|&j| beta_true[j] != 0.0);
        strata.push((Stratum::Signal, sig));
        strata.push((Stratum::Noise, noise));
    }
    let sel = if sparse { Some(selection_metrics(summary, beta_true)?) } else { None };
    strata
        .into_iter()
        .map(|(stratum, idx)| {
            let (coverage, avg_width) = interval_metrics_on(summary, beta_true, &idx)?;
            let sel = sel.filter(|_| stratum == Stratum::All);
            Ok(MetricsReport {
                method,
                setting: setting.number(),
                stratum,
                replication,
                mse: estimation_mse_on(mean.view(), beta_true, &idx)?,
                avg_width,
                coverage,
                tpr: sel.map(|s| s.tpr),
                tnr: sel.map(|s| s.tnr),
                fpr: sel.map(|s| s.fpr),
                fpr_degenerate: sel.map(|s| s.fpr_degenerate),
                fpr_conventional: sel.map(|s| s.fpr_conventional),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub reps: usize,
    /// Settings for the target fits. Its seed is replaced per replication.
    pub config: TraderConfig,
    /// Settings for the horseshoe fits that produce the source estimates.
    pub source_config: TraderConfig,
    /// Worker threads for concurrent replications; 0 uses all cores.
    pub jobs: usize,
    /// Replications forced to fail, for exercising failure handling.
    pub inject_failures: Vec<usize>,
}

impl BenchOptions {
    pub fn new(methods: Vec<Method>, reps: usize, config: TraderConfig) -> Self {
        BenchOptions {
            methods,
            reps,
            source_config: config.clone(),
            config,
            jobs: 0,
            inject_failures: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSeeds {
    pub replication: usize,
    pub data: u64,
    pub target_fit: u64,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    /// Sorted by replication, method and stratum.
    pub rows: Vec<MetricsReport>,
    pub failures: Vec<ReplicationFailure>,
    pub seeds: Vec<ReplicationSeeds>,
    /// Retained draws that passed the positivity and simplex checks.
    pub draws_checked: usize,
    pub wall_time_secs: f64,
}

pub fn replication_seed(master: u64, replication: usize) -> u64 {
    derive_seed(master, &[TAG_REPLICATION, replication as u64])
}

fn intercept_mean(chains: &[PosteriorDraws<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for c in chains {
        let a = c.intercept.as_ref()?;
        sum += a.sum();
        n += a.len();
    }
    (n > 0).then(|| sum / n as f64)
}

fn checked_draws(fit: &FitResult<f64>) -> Result<usize> {
    fit.chains.iter().try_fold(0, |acc, c| {
        c.validate()?;
        Ok(acc + c.n_draws())
    })
}

/// Horseshoe fits of each source, passed through the source-bundle format.
pub fn estimate_sources(
    sources: &[crate::data::Dataset<f64>],
    config: &TraderConfig,
    rep_seed: u64,
) -> Result<Vec<SourceEstimate<f64>>> {
    let mut estimates = Vec::with_capacity(sources.len());
    for (k, d) in sources.iter().enumerate() {
        let cfg = TraderConfig {
            seed: derive_seed(rep_seed, &[TAG_SOURCE_FIT, k as u64]),
            ..config.clone()
        };
        let fit = fit_horseshoe(d, &cfg)?;
        let intercept = if d.has_intercept() { intercept_mean(&fit.chains) } else { None };
        estimates.push(SourceEstimate::new(format!("source_{}", k + 1), fit.summary.means(), intercept)?);
    }
    io::parse_sources(&io::sources_to_json(&estimates)?)
}

/// Metric rows and the number of validated draws of one replication.
type ReplicationOutput = (Vec<MetricsReport>, usize);

fn run_replication(
    spec: &SimSpec,
    opts: &BenchOptions,
    replication: usize,
) -> Result<ReplicationOutput> {
    if opts.inject_failures.contains(&replication) {
        return Err(Error::Numerical("injected failure".into()));
    }
    let rep_seed = replication_seed(spec.seed, replication);
    let inst = match spec.setting {
        Setting::I => simgen::gen_setting1::<f64>(spec, rep_seed)?,
        Setting::II => simgen::gen_setting2::<f64>(spec, rep_seed)?,
        Setting::III => simgen::gen_setting3::<f64>(spec, rep_seed)?,
    };
    let cfg = TraderConfig {
        seed: derive_seed(rep_seed, &[TAG_TARGET_FIT]),
        ..opts.config.clone()
    };
    let mut rows = Vec::new();
    let mut checked = 0;
    for &method in &opts.methods {
        let fit = match method {
            Method::Horseshoe => fit_horseshoe(&inst.target, &cfg)?,
            Method::Trader => {
                let est = estimate_sources(&inst.sources, &opts.source_config, rep_seed)?;
                fit_trader(&inst.target, &est, &cfg)?
            }
        };
        checked += checked_draws(&fit)?;
        rows.extend(method_reports(method, spec.setting, replication, &fit.summary, inst.beta_true.view())?);
    }
    Ok((rows, checked))
}

/// Runs `reps` independent replications. Failed replications are logged and
/// excluded; the output depends only on the spec, the options and the
/// master seed `spec.seed`, never on the number of workers.
pub fn run_benchmark(spec: &SimSpec, opts: &BenchOptions) -> Result<BenchResult> {
    if opts.reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    if opts.methods.is_empty() {
        return Err(Error::invalid("no methods requested"));
    }
    spec.validate()?;
    opts.config.validate()?;
    opts.source_config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let outcomes: Vec<(usize, Result<ReplicationOutput>)> = pool.install(|| {
        (0..opts.reps)
            .into_par_iter()
            .map(|r| {
                let out = run_replication(spec, opts, r);
                match &out {
                    Ok(_) => log::info!("replication {r} done"),
                    Err(e) => log::warn!("replication {r} failed: {e}"),
                }
                (r, out)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut draws_checked = 0;
    for (r, out) in outcomes {
        match out {
            Ok((mut rs, c)) => {
                rows.append(&mut rs);
                draws_checked += c;
            }
            Err(e) => failures.push(ReplicationFailure { replication: r, message: e.to_string() }),
        }
    }
    rows.sort_by_key(|m| (m.replication, m.method, m.stratum));
    let seeds = (0..opts.reps)
        .map(|r| {
            let data = replication_seed(spec.seed, r);
            ReplicationSeeds { replication: r, data, target_fit: derive_seed(data, &[TAG_TARGET_FIT]) }
        })
        .collect();
    Ok(BenchResult {
        rows,
        failures,
        seeds,
        draws_checked,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn write_metrics(path: impl AsRef<Path>, rows: &[MetricsReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsReport>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<MetricsReport>, _>>()
        .map_err(|e| Error::load(path, e.to_string()))?;
    if rows.is_empty() {
        return Err(Error::load(path, "no metric rows"));
    }
    Ok(rows)
}

/// Mean, sample standard deviation and count of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub setting: u8,
    pub stratum: Stratum,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

pub const METRIC_NAMES: [&str; 7] = ["mse", "avg_width", "coverage", "tpr", "tnr", "fpr", "fpr_conventional"];

fn metric_value(r: &MetricsReport, name: &str) -> Option<f64> {
    match name {
        "mse" => Some(r.mse),
        "avg_width" => Some(r.avg_width),
        "coverage" => Some(r.coverage),
        "tpr" => r.tpr,
        "tnr" => r.tnr,
        "fpr" => r.fpr,
        "fpr_conventional" => r.fpr_conventional,
        _ => None,
    }
}

/// Groups rows by (method, setting, stratum) and summarises every metric
/// that is present in the group.
pub fn aggregate(rows: &[MetricsReport]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Method, u8, Stratum), Vec<&MetricsReport>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method, r.setting, r.stratum)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((method, setting, stratum), rs) in groups {
        for name in METRIC_NAMES {
            let v: Vec<f64> = rs.iter().filter_map(|r| metric_value(r, name)).collect();
            if v.is_empty() {
                continue;
            }
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            out.push(AggregateRow { method, setting, stratum, metric: name.to_string(), mean, sd, n });
        }
    }
    out
}

/// Mean of a metric over the rows matching `method` and `stratum`.
pub fn mean_metric(rows: &[MetricsReport], method: Method, stratum: Stratum, name: &str) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.stratum == stratum)
        .filter_map(|r| metric_value(r, name))
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-replication values of a metric, keyed by replication.
pub fn metric_by_replication(
    rows: &[MetricsReport],
    method: Method,
    stratum: Stratum,
    name: &str,
) -> BTreeMap<usize, f64> {
    rows.iter()
        .filter(|r| r.method == method && r.stratum == stratum)
        .filter_map(|r| metric_value(r, name).map(|v| (r.replication, v)))
        .collect()
}

pub fn truth_indices(beta_true: &Array1<f64>) -> (Vec<usize>, Vec<usize>) {
    (0..beta_true.len()).partition(|&j| beta_true[j] != 0.0)
}
