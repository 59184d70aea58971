//! Seeded generators for the three multi-source simulation designs.
//!
//! * Setting I: every source is a small Rademacher perturbation of the target.
//! * Setting II: only the first `k_a` sources are informative; the others put
//!   mass on a shifted support and carry an intercept.
//! * Setting III: dense coefficients drawn jointly with controlled
//!   target/source correlations and scales.
//!
//! Each source draws from its own random stream, so adding sources never
//! changes the data of earlier ones (except under independent Setting III
//! coupling, where all coefficients come from one joint draw).

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng, TAG_COEFFICIENTS, TAG_SOURCE, TAG_TARGET};
use crate::scalar::Real;

/// Scale ratios `alpha_t / alpha_sk` of the scale-robustness design.
pub const GRADED_SCALE_RATIOS: [f64; 10] = [1.0, 1.11, 1.22, 1.33, 1.44, 1.56, 1.66, 1.78, 1.89, 2.0];

/// Standard deviation of the perturbation vector in source covariances.
pub const SOURCE_COV_PERTURBATION_SD: f64 = 0.3;
pub const SETTING1_AR: f64 = 0.5;
pub const SETTING2_AR: f64 = 0.9;
pub const SETTING2_SOURCE_INTERCEPT: f64 = 0.5;
pub const SIGNAL_VALUE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    I,
    II,
    III,
}

impl Setting {
    pub fn number(self) -> u8 {
        match self {
            Setting::I => 1,
            Setting::II => 2,
            Setting::III => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Setting::I),
            2 => Ok(Setting::II),
            3 => Ok(Setting::III),
            _ => Err(Error::invalid(format!("setting must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// How Setting III sources relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceCoupling {
    /// Sources mutually uncorrelated. Requires `sum_k rho_k^2 <= 1`.
    #[default]
    Independent,
    /// Sources conditionally independent given the target coefficients;
    /// valid for any `|rho_k| <= 1`.
    ConditionalOnTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub setting: Setting,
    pub n0: usize,
    pub nk: usize,
    pub p: usize,
    pub s: usize,
    pub k: usize,
    pub h: f64,
    /// Number of informative sources (Setting II).
    pub k_a: Option<usize>,
    /// `alpha_t / alpha_sk` per source (Setting III).
    pub scale_ratios: Vec<f64>,
    /// Target/source correlations per source (Setting III).
    pub correlations: Vec<f64>,
    /// Expected squared norm scale of the target coefficients (Setting III).
    pub alpha_t: f64,
    #[serde(default)]
    pub source_coupling: SourceCoupling,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimSpec {
    /// Desk defaults: `n0 = nk = 120`, `p = 200`, `s = 20`, `h = 15`, `K = 10`.
    pub fn new(setting: Setting) -> Self {
        let k = 10;
        SimSpec {
            setting,
            n0: 120,
            nk: 120,
            p: 200,
            s: 20,
            k,
            h: 15.0,
            k_a: (setting == Setting::II).then_some(k),
            scale_ratios: vec![1.0; k],
            correlations: vec![0.7; k],
            alpha_t: 1.0,
            source_coupling: SourceCoupling::Independent,
            noise_sd: 1.0,
            seed: 0,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self.scale_ratios.resize(k, 1.0);
        let rho = self.correlations.first().copied().unwrap_or(0.7);
        self.correlations.resize(k, rho);
        if let Some(ka) = self.k_a {
            self.k_a = Some(ka.min(k));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.n0 == 0 || self.p == 0 {
            return bad("n0 and p must be positive".into());
        }
        if self.k > 0 && self.nk == 0 {
            return bad("nk must be positive when sources are requested".into());
        }
        if self.s > self.p {
            return bad(format!("s = {} exceeds p = {}", self.s, self.p));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be positive, got {}", self.noise_sd));
        }
        if !self.h.is_finite() || self.h < 0.0 {
            return bad(format!("h must be non-negative, got {}", self.h));
        }
        match self.setting {
            Setting::I => {}
            Setting::II => {
                let ka = self
                    .k_a
                    .ok_or_else(|| Error::invalid("setting II requires K_a"))?;
                if ka > self.k {
                    return bad(format!("K_a = {ka} exceeds K = {}", self.k));
                }
                if ka < self.k && (2 * self.s >= self.p || self.p - 2 * self.s < self.s) {
                    return bad(format!(
                        "uninformative support needs {} indices from {{2s+1..p}}, p = {}",
                        self.s, self.p
                    ));
                }
            }
            Setting::III => {
                if self.scale_ratios.len() != self.k || self.correlations.len() != self.k {
                    return bad(format!(
                        "setting III needs {} scale ratios and correlations",
                        self.k
                    ));
                }
                if self.scale_ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return bad("scale ratios must be positive".into());
                }
                if self.correlations.iter().any(|r| !(r.abs() <= 1.0)) {
                    return bad("correlations must lie in [-1, 1]".into());
                }
                if !(self.alpha_t > 0.0 && self.alpha_t.is_finite()) {
                    return bad("alpha_t must be positive".into());
                }
                if self.source_coupling == SourceCoupling::Independent
                    && !setting3_is_psd(&self.correlations)
                {
                    let ss: f64 = self.correlations.iter().map(|r| r * r).sum();
                    return bad(format!(
                        "setting III covariance is not positive semi-definite: sum of squared correlations {ss:.3} > 1"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Indices (0-based) of the nonzero target coefficients; empty for the dense design.
    pub fn signal_indices(&self) -> Vec<usize> {
        match self.setting {
            Setting::III => Vec::new(),
            _ => (0..self.s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimInstance<T> {
    pub target: Dataset<T>,
    pub sources: Vec<Dataset<T>>,
    pub beta_true: Array1<T>,
    pub omega_true: Vec<Array1<T>>,
    pub intercepts_true: Array1<T>,
}

/// `rho^{|j - j'|}`
pub fn ar1_covariance<T: Real>(p: usize, rho: f64) -> Result<Array2<T>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid(format!("AR(1) correlation must satisfy |rho| < 1, got {rho}")));
    }
    Ok(Array2::from_shape_fn((p, p), |(i, j)| {
        T::lit(rho.powi(i.abs_diff(j) as i32))
    }))
}

/// `(1/p) [[a_t^2, rho_k a_t a_sk], [rho_k a_t a_sk, diag(a_sk^2)]]`, target first.
pub fn setting3_covariance(alpha_t: f64, alpha_s: &[f64], rho: &[f64], p: usize) -> Array2<f64> {
    let k = alpha_s.len();
    let mut c = Array2::zeros((k + 1, k + 1));
    c[[0, 0]] = alpha_t * alpha_t;
    for i in 0..k {
        c[[0, i + 1]] = rho[i] * alpha_t * alpha_s[i];
        c[[i + 1, 0]] = c[[0, i + 1]];
        c[[i + 1, i + 1]] = alpha_s[i] * alpha_s[i];
    }
    c / p as f64
}

/// The arrow-shaped covariance is PSD iff the Schur complement of the
/// diagonal source block, `alpha_t^2 (1 - sum rho_k^2)`, is non-negative.
pub fn setting3_is_psd(rho: &[f64]) -> bool {
    let ss: f64 = rho.iter().map(|r| r * r).sum();
    ss <= 1.0 + 1e-12
}

/// Rows `x_i ~ N(0, A)` with `A_jj' = rho^|j - j'|`, generated by the
/// stationary AR(1) recursion along each row.
fn ar1_rows<T: Real>(n: usize, p: usize, rho: f64, rng: &mut StreamRng) -> Array2<T> {
    let r = T::lit(rho);
    let innov = T::lit((1.0 - rho * rho).sqrt());
    let mut x = Array2::zeros((n, p));
    for mut row in x.rows_mut() {
        let mut prev = T::sample_standard_normal(rng);
        row[0] = prev;
        for j in 1..p {
            prev = r * prev + innov * T::sample_standard_normal(rng);
            row[j] = prev;
        }
    }
    x
}

/// Rows `x_i ~ N(0, A + e e')`: an AR(1) row plus `e` times a shared
/// standard normal.
fn perturbed_ar1_rows<T: Real>(n: usize, e: &Array1<T>, rho: f64, rng: &mut StreamRng) -> Array2<T> {
    let mut x = ar1_rows::<T>(n, e.len(), rho, rng);
    for mut row in x.rows_mut() {
        let w = T::sample_standard_normal(rng);
        row.scaled_add(w, e);
    }
    x
}

/// Entrywise Student-t with 4 degrees of freedom.
fn student_t4_rows<T: Real>(n: usize, p: usize, rng: &mut StreamRng) -> Array2<T> {
    Array2::from_shape_simple_fn((n, p), || {
        let z = T::sample_standard_normal(rng);
        let chi2 = T::lit(2.0) * T::sample_gamma(T::lit(2.0), rng);
        z / (chi2 / T::lit(4.0)).sqrt()
    })
}

fn rademacher<T: Real>(p: usize, rng: &mut StreamRng) -> Array1<T> {
    (0..p)
        .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
        .collect()
}

fn respond<T: Real>(
    x: Array2<T>,
    coef: &Array1<T>,
    intercept: T,
    noise_sd: f64,
    has_intercept: bool,
    rng: &mut StreamRng,
) -> Result<Dataset<T>> {
    let sd = T::lit(noise_sd);
    let mut y = x.dot(coef);
    y.mapv_inplace(|v| v + intercept + sd * T::sample_standard_normal(rng));
    Dataset::new(x, y, has_intercept)
}

fn sparse_beta<T: Real>(p: usize, s: usize) -> Array1<T> {
    Array1::from_shape_fn(p, |j| if j < s { T::lit(SIGNAL_VALUE) } else { T::zero() })
}

fn check_setting(spec: &SimSpec, want: Setting) -> Result<()> {
    if spec.setting != want {
        return Err(Error::invalid(format!(
            "SimSpec is for setting {:?}, generator is for {:?}",
            spec.setting, want
        )));
    }
    spec.validate()
}

/// Generates one replication seeded by `spec.seed`.
pub fn generate<T: Real>(spec: &SimSpec) -> Result<SimInstance<T>> {
    match spec.setting {
        Setting::I => gen_setting1(spec, spec.seed),
        Setting::II => gen_setting2(spec, spec.seed),
        Setting::III => gen_setting3(spec, spec.seed),
    }
}

/// Setting-I target plus Gaussian sources built from the given coefficients.
fn gaussian_design<T: Real>(
    spec: &SimSpec,
    seed: u64,
    beta: Array1<T>,
    omegas: Vec<Array1<T>>,
) -> Result<SimInstance<T>> {
    let mut trng = rng::stream(seed, &[TAG_TARGET]);
    let x0 = ar1_rows::<T>(spec.n0, spec.p, SETTING1_AR, &mut trng);
    let target = respond(x0, &beta, T::zero(), spec.noise_sd, false, &mut trng)?;
    let mut sources = Vec::with_capacity(spec.k);
    for (k, omega) in omegas.iter().enumerate() {
        let mut srng = rng::stream(seed, &[TAG_SOURCE, k as u64, 1]);
        let sd = T::lit(SOURCE_COV_PERTURBATION_SD);
        let e: Array1<T> = (0..spec.p).map(|_| sd * T::sample_standard_normal(&mut srng)).collect();
        let x = perturbed_ar1_rows(spec.nk, &e, SETTING1_AR, &mut srng);
        sources.push(respond(x, omega, T::zero(), spec.noise_sd, false, &mut srng)?);
    }
    Ok(SimInstance {
        target,
        sources,
        beta_true: beta,
        omega_true: omegas,
        intercepts_true: Array1::zeros(spec.k),
    })
}

/// All sources informative: `omega_j = beta_j + (h/p) I_j` with Rademacher `I`.
pub fn gen_setting1<T: Real>(spec: &SimSpec, seed: u64) -> Result<SimInstance<T>> {
    check_setting(spec, Setting::I)?;
    let beta = sparse_beta::<T>(spec.p, spec.s);
    let shift = T::lit(spec.h / spec.p as f64);
    let omegas = (0..spec.k)
        .map(|k| {
            let mut r = rng::stream(seed, &[TAG_SOURCE, k as u64, 0]);
            &beta + &rademacher::<T>(spec.p, &mut r).mapv(|v| v * shift)
        })
        .collect();
    gaussian_design(spec, seed, beta, omegas)
}

/// The first `k_a` sources are informative as in Setting I; the rest are
/// shifted onto `{s+1..2s} ∪ S(k)` and the source responses carry an
/// intercept of 0.5. Target covariates use AR(0.9), source covariates are
/// iid Student-t4.
pub fn gen_setting2<T: Real>(spec: &SimSpec, seed: u64) -> Result<SimInstance<T>> {
    check_setting(spec, Setting::II)?;
    let (p, s) = (spec.p, spec.s);
    let k_a = spec.k_a.expect("validated");
    let beta = sparse_beta::<T>(p, s);
    let mut trng = rng::stream(seed, &[TAG_TARGET]);
    let x0 = ar1_rows::<T>(spec.n0, p, SETTING2_AR, &mut trng);
    let target = respond(x0, &beta, T::zero(), spec.noise_sd, false, &mut trng)?;

    let intercept = T::lit(SETTING2_SOURCE_INTERCEPT);
    let mut sources = Vec::with_capacity(spec.k);
    let mut omegas = Vec::with_capacity(spec.k);
    for k in 0..spec.k {
        let mut crng = rng::stream(seed, &[TAG_SOURCE, k as u64, 0]);
        let omega = if k < k_a {
            let shift = T::lit(spec.h / p as f64);
            &beta + &rademacher::<T>(p, &mut crng).mapv(|v| v * shift)
        } else {
            let shift = T::lit(2.0 * spec.h / p as f64);
            let mut w = rademacher::<T>(p, &mut crng).mapv(|v| v * shift);
            let chosen = index::sample(&mut crng, p - 2 * s, s);
            let bump = T::lit(SIGNAL_VALUE);
            for j in (s..2 * s).chain(chosen.iter().map(|i| i + 2 * s)) {
                w[j] = w[j] + bump;
            }
            w
        };
        let mut srng = rng::stream(seed, &[TAG_SOURCE, k as u64, 1]);
        let x = student_t4_rows::<T>(spec.nk, p, &mut srng);
        sources.push(respond(x, &omega, intercept, spec.noise_sd, true, &mut srng)?);
        omegas.push(omega);
    }
    Ok(SimInstance {
        target,
        sources,
        beta_true: beta,
        omega_true: omegas,
        intercepts_true: Array1::from_elem(spec.k, intercept),
    })
}

/// Dense coefficients `(beta_j, omega_j^(1..K))` drawn iid over `j` with
/// target/source correlations `rho_k` and scales `alpha_sk = alpha_t / ratio_k`;
/// covariates and responses as in Setting I.
pub fn gen_setting3<T: Real>(spec: &SimSpec, seed: u64) -> Result<SimInstance<T>> {
    check_setting(spec, Setting::III)?;
    let p = spec.p;
    let pf = p as f64;
    let alpha_t = spec.alpha_t;
    let alpha_s: Vec<f64> = spec.scale_ratios.iter().map(|r| alpha_t / r).collect();
    let rho = &spec.correlations;
    let mut crng = rng::stream(seed, &[TAG_COEFFICIENTS]);
    let (beta, omegas): (Array1<f64>, Vec<Array1<f64>>) = match spec.source_coupling {
        SourceCoupling::Independent => {
            // Source coordinates first, then the target given them:
            // beta = sum_k rho_k (a_t / a_sk) omega_k + a_t sqrt(1 - sum rho^2) z / sqrt(p)
            let resid = (1.0 - rho.iter().map(|r| r * r).sum::<f64>()).max(0.0).sqrt();
            let mut beta = Array1::zeros(p);
            let mut omegas = vec![Array1::zeros(p); spec.k];
            for j in 0..p {
                let mut b = 0.0;
                for k in 0..spec.k {
                    let w = alpha_s[k] / pf.sqrt() * f64::sample_standard_normal(&mut crng);
                    omegas[k][j] = w;
                    b += rho[k] * alpha_t / alpha_s[k] * w;
                }
                beta[j] = b + alpha_t * resid / pf.sqrt() * f64::sample_standard_normal(&mut crng);
            }
            (beta, omegas)
        }
        SourceCoupling::ConditionalOnTarget => {
            let beta: Array1<f64> =
                (0..p).map(|_| alpha_t / pf.sqrt() * f64::sample_standard_normal(&mut crng)).collect();
            let omegas = (0..spec.k)
                .map(|k| {
                    let mut r = rng::stream(seed, &[TAG_SOURCE, k as u64, 0]);
                    let noise_sd = alpha_s[k] / pf.sqrt() * (1.0 - rho[k] * rho[k]).sqrt();
                    beta.mapv(|b| {
                        rho[k] * alpha_s[k] / alpha_t * b + noise_sd * f64::sample_standard_normal(&mut r)
                    })
                })
                .collect();
            (beta, omegas)
        }
    };
    let beta = beta.mapv(T::lit);
    let omegas = omegas.into_iter().map(|w| w.mapv(T::lit)).collect();
    gaussian_design(spec, seed, beta, omegas)
}
