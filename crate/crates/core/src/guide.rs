//! Source preparation: validation split, rescaling, cosine weighting and the
//! choice of the global scale.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::TraderConfig;
use crate::data::{check_source_dims, Dataset, SourceEstimate};
use crate::error::{Error, Result};
use crate::rng::{self, TAG_BETA_VAL, TAG_SPLIT};
use crate::sampler::fit_horseshoe;
use crate::scalar::{dot, norm2, Real};

/// Rescaled sources, their Dirichlet concentrations and the fixed global scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GuideSet<T> {
    /// `K x p`
    pub omega_tilde: Array2<T>,
    pub theta: Array1<T>,
    pub zeta: T,
    pub beta_val: Array1<T>,
    pub scale_factors: Array1<T>,
    pub tau: T,
}

impl<T: Real> GuideSet<T> {
    /// A guide without sources: the prior mean is identically zero.
    pub fn empty(p: usize, tau: T, zeta: T) -> Self {
        GuideSet {
            omega_tilde: Array2::zeros((0, p)),
            theta: Array1::zeros(0),
            zeta,
            beta_val: Array1::zeros(0),
            scale_factors: Array1::zeros(0),
            tau,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.omega_tilde.nrows()
    }

    pub fn p(&self) -> usize {
        self.omega_tilde.ncols()
    }

    /// Dirichlet concentrations `(theta_1, ..., theta_K, zeta)`.
    pub fn concentrations(&self) -> Array1<T> {
        self.theta
            .iter()
            .copied()
            .chain(std::iter::once(self.zeta))
            .collect()
    }

    pub fn record(&self) -> GuideRecord {
        GuideRecord {
            omega_tilde: self
                .omega_tilde
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.as_f64()).collect())
                .collect(),
            theta: self.theta.iter().map(|v| v.as_f64()).collect(),
            zeta: self.zeta.as_f64(),
            beta_val: self.beta_val.iter().map(|v| v.as_f64()).collect(),
            scale_factors: self.scale_factors.iter().map(|v| v.as_f64()).collect(),
            tau: self.tau.as_f64(),
        }
    }
}

/// Serialisable snapshot of a [`GuideSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuideRecord {
    pub omega_tilde: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub zeta: f64,
    pub beta_val: Vec<f64>,
    pub scale_factors: Vec<f64>,
    pub tau: f64,
}

/// Random disjoint split into `(train, validation)`, with
/// `round(n * fraction)` validation rows. Both parts keep the original row order.
pub fn split_validation<T: Real>(
    data: &Dataset<T>,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, val) = split_indices(data.n(), fraction, seed)?;
    Ok((data.select_rows(&train)?, data.select_rows(&val)?))
}

/// Row indices of the `(train, validation)` partition.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if (n as f64) * fraction < 2.0 {
        return Err(Error::invalid(format!(
            "validation split of {n} rows at fraction {fraction} leaves fewer than 2 rows"
        )));
    }
    let n_val = ((n as f64) * fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::invalid("validation split leaves an empty part"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[TAG_SPLIT]));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

/// Posterior-mean coefficients of a standard-horseshoe fit on the validation
/// rows, using half-length chains and a derived seed.
pub fn estimate_beta_val<T: Real>(val: &Dataset<T>, config: &TraderConfig) -> Result<Array1<T>> {
    let cfg = TraderConfig {
        seed: rng::derive_seed(config.seed, &[TAG_BETA_VAL]),
        ..config.halved()
    };
    let fit = fit_horseshoe(val, &cfg)?;
    Ok(fit.summary.means())
}

fn checked_norm<T: Real>(v: ArrayView1<'_, T>, what: &str) -> Result<T> {
    let n = match v.as_slice() {
        Some(s) => norm2(s),
        None => v.iter().map(|x| *x * *x).sum::<T>().sqrt(),
    };
    if n > T::zero() && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::ZeroNorm(what.to_string()))
    }
}

/// Scales `omega_hat` to the norm of `beta_val`; returns the scaled vector
/// and the factor `|beta_val| / |omega_hat|`.
pub fn rescale_source<T: Real>(
    omega_hat: ArrayView1<'_, T>,
    beta_val: ArrayView1<'_, T>,
) -> Result<(Array1<T>, T)> {
    if omega_hat.len() != beta_val.len() {
        return Err(Error::invalid("rescale: length mismatch"));
    }
    let target = checked_norm(beta_val, "validation estimate has zero norm (uninformative fit)")?;
    let own = checked_norm(omega_hat, "source estimate has zero norm")?;
    let factor = target / own;
    Ok((omega_hat.mapv(|v| v * factor), factor))
}

pub fn cosine_similarity<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::invalid("cosine similarity: length mismatch"));
    }
    let na = checked_norm(a, "cosine similarity of a zero vector")?;
    let nb = checked_norm(b, "cosine similarity of a zero vector")?;
    let ab = match (a.as_slice(), b.as_slice()) {
        (Some(x), Some(y)) => dot(x, y),
        _ => a.dot(&b),
    };
    Ok((ab / (na * nb)).max(-T::one()).min(T::one()))
}

/// Rescales every source, turns cosine similarities into clamped Dirichlet
/// concentrations and fixes the global scale.
pub fn build_guide<T: Real>(
    sources: &[SourceEstimate<T>],
    beta_val: &Array1<T>,
    config: &TraderConfig,
    n_train: usize,
) -> Result<GuideSet<T>> {
    let p = beta_val.len();
    check_source_dims(sources, p)?;
    let k = sources.len();
    let floor = T::lit(config.theta_floor);
    let mut omega_tilde = Array2::zeros((k, p));
    let mut theta = Array1::zeros(k);
    let mut factors = Array1::zeros(k);
    for (i, s) in sources.iter().enumerate() {
        let (scaled, factor) = rescale_source(s.omega_hat.view(), beta_val.view())?;
        omega_tilde.row_mut(i).assign(&scaled);
        factors[i] = factor;
        theta[i] = cosine_similarity(s.omega_hat.view(), beta_val.view())?.max(floor);
    }
    let tau = match config.tau_override {
        Some(t) => T::lit(t),
        None => T::lit(select_tau(p, n_train, config.psi_hat_for(p))?),
    };
    Ok(GuideSet {
        omega_tilde,
        theta,
        zeta: T::lit(config.zeta),
        beta_val: beta_val.clone(),
        scale_factors: factors,
        tau,
    })
}

/// Global scale solving `E(psi | tau) = psi_hat`: `(p - psi_hat) / (sqrt(n0) * psi_hat)`.
pub fn select_tau(p: usize, n0: usize, psi_hat: f64) -> Result<f64> {
    if !(psi_hat > 0.0 && psi_hat < p as f64) {
        return Err(Error::invalid(format!(
            "psi_hat must lie in (0, p = {p}), got {psi_hat}"
        )));
    }
    if n0 == 0 {
        return Err(Error::invalid("select_tau needs at least one observation"));
    }
    // Ratio first so that psi_hat = p / 2 yields exactly 1 / sqrt(n0).
    Ok(((p as f64 - psi_hat) / psi_hat) / (n0 as f64).sqrt())
}

/// Expected number of source-dominated coordinates, `p / (1 + tau sqrt(n0))`.
pub fn expected_informative_count(tau: f64, p: usize, n0: usize) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("tau must be non-negative, got {tau}")));
    }
    Ok(p as f64 / (1.0 + tau * (n0 as f64).sqrt()))
}
