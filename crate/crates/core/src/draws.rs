//! Retained MCMC output and its pooled summary.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws<T> {
    /// `S x p`
    pub beta: Array2<T>,
    /// Present iff an intercept was modelled.
    pub intercept: Option<Array1<T>>,
    pub sigma2: Array1<T>,
    /// Local scales `lambda_j` (not squared), `S x p`.
    pub lambda: Array2<T>,
    /// Simplex weights, `S x (K + 1)`.
    pub eta: Array2<T>,
    pub tau: T,
    pub chain_id: usize,
    pub seed: u64,
    pub config_digest: String,
}

impl<T: Real> PosteriorDraws<T> {
    pub fn n_draws(&self) -> usize {
        self.beta.nrows()
    }

    pub fn p(&self) -> usize {
        self.beta.ncols()
    }

    pub fn n_weights(&self) -> usize {
        self.eta.ncols()
    }

    /// Checks shapes, positivity and the simplex constraint.
    pub fn validate(&self) -> Result<()> {
        let s = self.n_draws();
        let p = self.p();
        if self.sigma2.len() != s
            || self.lambda.dim() != (s, p)
            || self.eta.nrows() != s
            || self.intercept.as_ref().is_some_and(|a| a.len() != s)
        {
            return Err(Error::invalid("inconsistent draw dimensions"));
        }
        if self.sigma2.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::invalid("non-positive sigma2 draw"));
        }
        if self.lambda.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::invalid("non-positive lambda draw"));
        }
        let tol = simplex_tolerance::<T>();
        for (i, row) in self.eta.rows().into_iter().enumerate() {
            let sum: T = row.iter().copied().sum();
            if row.iter().any(|v| *v < T::zero()) || (sum - T::one()).abs() > tol {
                return Err(Error::invalid(format!("eta row {i} is off the simplex")));
            }
        }
        Ok(())
    }
}

/// Allowed deviation of a weight vector's sum from one.
pub fn simplex_tolerance<T: Real>() -> T {
    // 1e-12 in double precision; scaled for narrower types.
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSummary<T> {
    pub mean: T,
    pub median: T,
    pub lower: T,
    pub upper: T,
    /// The credible interval excludes zero.
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<T> {
    pub level: T,
    pub coefficients: Vec<CoefficientSummary<T>>,
}

impl<T: Real> PosteriorSummary<T> {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    pub fn means(&self) -> Array1<T> {
        self.coefficients.iter().map(|c| c.mean).collect()
    }
}
