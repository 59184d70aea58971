use rayon::prelude::*;

use super::chain::run_chain_on;
use super::summary::summarize;
use super::Design;
use crate::config::TraderConfig;
use crate::data::{check_source_dims, Dataset, SourceEstimate};
use crate::draws::{PosteriorDraws, PosteriorSummary};
use crate::error::{Error, Result};
use crate::guide::{build_guide, estimate_beta_val, select_tau, split_validation, GuideSet};
use crate::rng::{self, TAG_SPLIT};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub chains: Vec<PosteriorDraws<T>>,
    pub summary: PosteriorSummary<T>,
    pub guide: GuideSet<T>,
    /// Rows the chains were run on.
    pub n_train: usize,
}

/// Runs `config.n_chains` chains concurrently and returns them in chain order.
pub fn run_chains<T: Real>(
    train: &Dataset<T>,
    guide: &GuideSet<T>,
    config: &TraderConfig,
) -> Result<Vec<PosteriorDraws<T>>> {
    let design = Design::from_dataset(train);
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain_on(&design, guide, config, c, config.seed))
        .collect()
}

fn finish<T: Real>(
    chains: Vec<PosteriorDraws<T>>,
    guide: GuideSet<T>,
    config: &TraderConfig,
    n_train: usize,
) -> Result<FitResult<T>> {
    let summary = summarize(&chains, config.ci_level)?;
    Ok(FitResult {
        chains,
        summary,
        guide,
        n_train,
    })
}

/// Standard horseshoe on all rows: zero prior mean, global scale from the
/// informative-count rule unless overridden.
pub fn fit_horseshoe<T: Real>(data: &Dataset<T>, config: &TraderConfig) -> Result<FitResult<T>> {
    config.validate()?;
    let p = data.p();
    let tau = match config.tau_override {
        Some(t) => t,
        None => select_tau(p, data.n(), config.psi_hat_for(p))?,
    };
    let guide = GuideSet::empty(p, T::lit(tau), T::lit(config.zeta));
    let chains = run_chains(data, &guide, config)?;
    finish(chains, guide, config, data.n())
}

/// Source-guided fit: hold out a validation split, estimate the target
/// direction on it, build the guide and sample on the remaining rows.
///
/// Without sources there is nothing to rescale or weight, so no rows are held
/// out and the result coincides with [`fit_horseshoe`].
pub fn fit_trader<T: Real>(
    data: &Dataset<T>,
    sources: &[SourceEstimate<T>],
    config: &TraderConfig,
) -> Result<FitResult<T>> {
    config.validate()?;
    check_source_dims(sources, data.p())?;
    if sources.is_empty() {
        return fit_horseshoe(data, config);
    }
    let split_seed = rng::derive_seed(config.seed, &[TAG_SPLIT]);
    let (train, val) = split_validation(data, config.validation_fraction, split_seed)?;
    let beta_val = estimate_beta_val(&val, config)?;
    let guide = build_guide(sources, &beta_val, config, train.n())?;
    let chains = run_chains(&train, &guide, config)?;
    if chains.is_empty() {
        return Err(Error::invalid("no chains were run"));
    }
    finish(chains, guide, config, train.n())
}
