//! Metropolis-within-Gibbs sampler for the source-guided horseshoe posterior.
//!
//! The standard horseshoe is the special case of a guide without sources:
//! the prior mean is zero and the simplex weights stay at `(1)`.

mod chain;
mod conditionals;
mod diagnostics;
mod fit;
mod summary;

use ndarray::{Array1, Array2};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::guide::GuideSet;
use crate::scalar::Real;

pub use chain::{run_chain, GibbsSampler, UpdateMask};
pub use conditionals::{
    beta_conditional_mean, beta_conditional_mean_woodbury, eta_log_acceptance_ratio,
    log_dirichlet_density, sample_beta_conditional, sample_beta_with, sample_dirichlet,
    sample_eta_mh, sample_intercept_conditional, sample_inverse_gamma, sample_lambda_conditional,
    sample_sigma2_conditional, BetaMethod, ETA_PROPOSAL_FLOOR, WOODBURY_MIN_P,
};
pub use diagnostics::{diagnostics, effective_sample_size, split_rhat, ParamDiagnostic, RHAT_FLAG};
pub use fit::{fit_horseshoe, fit_trader, run_chains, FitResult};
pub use summary::{quantile_sorted, summarize};

/// Sufficient statistics of the training data, precomputed once per chain.
#[derive(Debug, Clone)]
pub struct Design<T> {
    x: Array2<T>,
    y: Array1<T>,
    xtx: Array2<T>,
    xty: Array1<T>,
    col_sums: Array1<T>,
    y_sum: T,
    has_intercept: bool,
}

impl<T: Real> Design<T> {
    pub fn new(x: Array2<T>, y: Array1<T>, has_intercept: bool) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::invalid("design rows and response length differ"));
        }
        let xtx = x.t().dot(&x);
        let xty = x.t().dot(&y);
        let col_sums = x.sum_axis(ndarray::Axis(0));
        let y_sum = y.sum();
        Ok(Design {
            x,
            y,
            xtx,
            xty,
            col_sums,
            y_sum,
            has_intercept,
        })
    }

    pub fn from_dataset(data: &Dataset<T>) -> Self {
        Design::new(data.x().clone(), data.y().clone(), data.has_intercept())
            .expect("dataset dimensions are validated")
    }

    /// A design with no observations: every conditional reduces to its prior.
    pub fn empty(p: usize) -> Self {
        Design::new(Array2::zeros((0, p)), Array1::zeros(0), false).expect("empty design")
    }

    /// Replaces the response, keeping the covariates.
    pub fn set_response(&mut self, y: Array1<T>) -> Result<()> {
        if y.len() != self.x.nrows() {
            return Err(Error::invalid("response length does not match design"));
        }
        self.xty = self.x.t().dot(&y);
        self.y_sum = y.sum();
        self.y = y;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<T> {
        &self.x
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn xtx(&self) -> &Array2<T> {
        &self.xtx
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    /// `y - X beta - intercept`
    pub fn residuals(&self, beta: &Array1<T>, intercept: T) -> Array1<T> {
        let fitted = self.x.dot(beta);
        let mut r = &self.y - &fitted;
        if intercept != T::zero() {
            r.mapv_inplace(|v| v - intercept);
        }
        r
    }
}

/// Current values of all sampled quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<T> {
    pub beta: Array1<T>,
    pub intercept: Option<T>,
    pub sigma2: T,
    pub lambda2: Array1<T>,
    /// Auxiliary scales of the inverse-gamma representation of the half-Cauchy.
    pub aux_nu: Array1<T>,
    pub eta: Array1<T>,
}

impl<T: Real> ChainState<T> {
    pub fn intercept_value(&self) -> T {
        self.intercept.unwrap_or_else(T::zero)
    }
}

/// Prior mean `sum_k eta_k omega_tilde_k`; the zero component adds nothing.
pub fn prior_mean<T: Real>(guide: &GuideSet<T>, eta: &Array1<T>) -> Array1<T> {
    let k = guide.n_sources();
    let mut m = Array1::zeros(guide.p());
    for (row, &w) in guide.omega_tilde.rows().into_iter().zip(eta.iter().take(k)) {
        if w != T::zero() {
            m.scaled_add(w, &row);
        }
    }
    m
}

/// Shrinkage weight toward the prior mean under an orthogonal design,
/// `1 / (1 + tau^2 lambda^2 n0)`.
pub fn kappa(tau: f64, lambda: f64, n0: usize) -> f64 {
    1.0 / (1.0 + tau * tau * lambda * lambda * n0 as f64)
}
