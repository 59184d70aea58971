//! Split-R-hat and autocorrelation-based effective sample size.

use crate::draws::PosteriorDraws;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// R-hat above this value marks a parameter as not converged.
pub const RHAT_FLAG: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostic {
    pub parameter: String,
    /// Omitted for a single chain.
    pub rhat: Option<f64>,
    pub ess: f64,
    pub flagged: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = if x.len() > 1 {
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// Potential scale reduction over chains split in half.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        return f64::NAN;
    }
    let mut parts: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        parts.push(&c[..half]);
        parts.push(&c[c.len() - half..]);
    }
    let n = half as f64;
    let stats: Vec<(f64, f64)> = parts.iter().map(|p| mean_var(p)).collect();
    let m = stats.len() as f64;
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
    let b = n * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n - lag {
        s += (x[i] - mean) * (x[i + lag] - mean);
    }
    s / n as f64
}

/// Multi-chain ESS with Geyer's initial monotone sequence estimator.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let m = chains.len();
    if n < 4 || m == 0 {
        return (n * m) as f64;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(c)).collect();
    let nf = n as f64;
    let mf = m as f64;
    let w = stats.iter().map(|s| s.1).sum::<f64>() / mf;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / mf;
    let b_over_n = if m > 1 {
        stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (mf - 1.0)
    } else {
        0.0
    };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if var_plus <= 0.0 {
        return nf * mf;
    }
    let rho = |t: usize| -> f64 {
        let acov = chains
            .iter()
            .zip(&stats)
            .map(|(c, s)| autocovariance(c, s.0, t))
            .sum::<f64>()
            / mf;
        1.0 - (w - acov) / var_plus
    };
    // Sum of paired autocorrelations, truncated at the first negative pair
    // and forced to be non-increasing.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    // Caps ESS at N log10(N) for antithetic chains.
    let tau = tau.max(1.0 / (nf * mf).log10().max(1.0));
    nf * mf / tau
}

fn param_diag(name: String, chains: &[Vec<f64>]) -> ParamDiagnostic {
    let rhat = (chains.len() >= 2).then(|| split_rhat(chains));
    let ess = effective_sample_size(chains);
    let flagged = rhat.is_some_and(|r| !(r <= RHAT_FLAG));
    ParamDiagnostic {
        parameter: name,
        rhat,
        ess,
        flagged,
    }
}

/// Per-parameter convergence report for `beta_j`, the intercept, `sigma2`
/// and the simplex weights. With one chain only ESS is reported.
pub fn diagnostics<T: Real>(draws: &[PosteriorDraws<T>]) -> Result<Vec<ParamDiagnostic>> {
    let first = draws.first().ok_or_else(|| Error::invalid("no chains"))?;
    let (p, k1) = (first.p(), first.n_weights());
    if draws.iter().any(|d| d.p() != p || d.n_weights() != k1) {
        return Err(Error::invalid("chains disagree on dimensions"));
    }
    let collect = |f: &dyn Fn(&PosteriorDraws<T>) -> Vec<f64>| -> Vec<Vec<f64>> {
        draws.iter().map(f).collect()
    };
    let mut out = Vec::with_capacity(p + k1 + 2);
    for j in 0..p {
        let c = collect(&|d| d.beta.column(j).iter().map(|v| v.as_f64()).collect());
        out.push(param_diag(format!("beta_{}", j + 1), &c));
    }
    if first.intercept.is_some() {
        let c = collect(&|d| {
            d.intercept
                .as_ref()
                .map(|a| a.iter().map(|v| v.as_f64()).collect())
                .unwrap_or_default()
        });
        out.push(param_diag("intercept".into(), &c));
    }
    let c = collect(&|d| d.sigma2.iter().map(|v| v.as_f64()).collect());
    out.push(param_diag("sigma2".into(), &c));
    if k1 > 1 {
        for k in 0..k1 {
            let c = collect(&|d| d.eta.column(k).iter().map(|v| v.as_f64()).collect());
            out.push(param_diag(format!("eta_{}", k + 1), &c));
        }
    }
    Ok(out)
}
