use ndarray::{Array1, Array2};
use rand::Rng;

use super::conditionals::{
    sample_beta_with, sample_eta_mh, sample_intercept_conditional, sample_lambda_conditional,
    sample_sigma2_conditional, BetaMethod,
};
use super::{ChainState, Design};
use crate::config::TraderConfig;
use crate::data::Dataset;
use crate::draws::PosteriorDraws;
use crate::error::{Error, Result};
use crate::guide::GuideSet;
use crate::rng::{self, TAG_CHAIN};
use crate::scalar::Real;

/// Which blocks a sweep updates. Frozen blocks keep their current value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateMask {
    pub beta: bool,
    pub intercept: bool,
    pub local_scales: bool,
    pub eta: bool,
    pub sigma2: bool,
}

impl Default for UpdateMask {
    fn default() -> Self {
        UpdateMask {
            beta: true,
            intercept: true,
            local_scales: true,
            eta: true,
            sigma2: true,
        }
    }
}

/// Systematic-scan sampler: beta, intercept, (lambda, nu), eta, sigma^2.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a, T> {
    design: &'a Design<T>,
    guide: &'a GuideSet<T>,
    nu: T,
    eta_concentration: T,
    pub mask: UpdateMask,
    pub beta_method: BetaMethod,
}

impl<'a, T: Real> GibbsSampler<'a, T> {
    pub fn new(design: &'a Design<T>, guide: &'a GuideSet<T>, config: &TraderConfig) -> Result<Self> {
        if design.p() != guide.p() {
            return Err(Error::invalid(format!(
                "design has {} covariates, guide has {}",
                design.p(),
                guide.p()
            )));
        }
        if design.has_intercept() && design.n() == 0 {
            return Err(Error::invalid("intercept requires at least one observation"));
        }
        if !(guide.tau > T::zero()) || !guide.tau.is_finite() {
            return Err(Error::invalid(format!("tau must be positive, got {}", guide.tau)));
        }
        Ok(GibbsSampler {
            design,
            guide,
            nu: T::lit(config.nu),
            eta_concentration: T::lit(config.eta_proposal_concentration),
            mask: UpdateMask::default(),
            beta_method: BetaMethod::Auto,
        })
    }

    pub fn design(&self) -> &Design<T> {
        self.design
    }

    pub fn guide(&self) -> &GuideSet<T> {
        self.guide
    }

    /// Weights at the prior mean, unit local scales, beta at zero and the
    /// noise variance at the sample variance of the response.
    pub fn initial_state(&self) -> ChainState<T> {
        let p = self.design.p();
        let conc = self.guide.concentrations();
        let eta = &conc / conc.sum();
        let n = self.design.n();
        let y = self.design.y();
        let (mean, var) = if n >= 2 {
            let nf = T::from_usize(n).unwrap();
            let mean = y.sum() / nf;
            let var = y.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / (nf - T::one());
            (mean, var)
        } else {
            (T::zero(), T::one())
        };
        let sigma2 = if var > T::zero() && var.is_finite() { var } else { T::one() };
        ChainState {
            beta: Array1::zeros(p),
            intercept: self.design.has_intercept().then_some(mean),
            sigma2,
            lambda2: Array1::ones(p),
            aux_nu: Array1::ones(p),
            eta,
        }
    }

    /// One full sweep. Returns whether the eta proposal was accepted.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R) -> Result<bool> {
        let (design, guide) = (self.design, self.guide);
        if self.mask.beta {
            state.beta = sample_beta_with(self.beta_method, state, guide, design, rng)?;
        }
        if self.mask.intercept && design.has_intercept() {
            state.intercept = Some(sample_intercept_conditional(state, design, rng)?);
        }
        if self.mask.local_scales {
            let (l2, aux) = sample_lambda_conditional(state, guide, rng)?;
            state.lambda2 = l2;
            state.aux_nu = aux;
        }
        let mut accepted = false;
        if self.mask.eta {
            let (eta, acc) = sample_eta_mh(state, guide, self.eta_concentration, rng);
            state.eta = eta;
            accepted = acc;
        }
        if self.mask.sigma2 {
            state.sigma2 = sample_sigma2_conditional(state, guide, design, self.nu, rng)?;
        }
        Ok(accepted)
    }
}

/// Runs one chain on `train`: `n_warmup` discarded sweeps followed by
/// `n_samples` retained ones. The random stream depends only on
/// `(seed, chain_id)`.
pub fn run_chain<T: Real>(
    train: &Dataset<T>,
    guide: &GuideSet<T>,
    config: &TraderConfig,
    chain_id: usize,
    seed: u64,
) -> Result<PosteriorDraws<T>> {
    let design = Design::from_dataset(train);
    run_chain_on(&design, guide, config, chain_id, seed)
}

pub(crate) fn run_chain_on<T: Real>(
    design: &Design<T>,
    guide: &GuideSet<T>,
    config: &TraderConfig,
    chain_id: usize,
    seed: u64,
) -> Result<PosteriorDraws<T>> {
    config.validate()?;
    let sampler = GibbsSampler::new(design, guide, config)?;
    let mut rng = rng::stream(seed, &[TAG_CHAIN, chain_id as u64]);
    let mut state = sampler.initial_state();
    let (p, k1, s) = (design.p(), guide.n_sources() + 1, config.n_samples);
    let mut beta = Array2::zeros((s, p));
    let mut lambda = Array2::zeros((s, p));
    let mut eta = Array2::zeros((s, k1));
    let mut sigma2 = Array1::zeros(s);
    let mut intercept = design.has_intercept().then(|| Array1::zeros(s));
    let mut accepted = 0usize;
    for it in 0..config.n_warmup + s {
        let acc = sampler.step(&mut state, &mut rng).map_err(|e| Error::Chain {
            chain_id,
            iteration: it,
            source: Box::new(e),
        })?;
        if it < config.n_warmup {
            continue;
        }
        accepted += usize::from(acc);
        let i = it - config.n_warmup;
        beta.row_mut(i).assign(&state.beta);
        lambda.row_mut(i).assign(&state.lambda2.mapv(|v| v.sqrt()));
        eta.row_mut(i).assign(&state.eta);
        sigma2[i] = state.sigma2;
        if let (Some(a), Some(v)) = (intercept.as_mut(), state.intercept) {
            a[i] = v;
        }
    }
    if k1 > 1 {
        log::debug!(
            "chain {chain_id}: eta acceptance rate {:.3}",
            accepted as f64 / s as f64
        );
    }
    let draws = PosteriorDraws {
        beta,
        intercept,
        sigma2,
        lambda,
        eta,
        tau: guide.tau,
        chain_id,
        seed,
        config_digest: config.digest(),
    };
    draws.validate().map_err(|e| Error::Chain {
        chain_id,
        iteration: config.n_warmup + s,
        source: Box::new(e),
    })?;
    Ok(draws)
}
