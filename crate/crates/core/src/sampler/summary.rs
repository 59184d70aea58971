use crate::draws::{CoefficientSummary, PosteriorDraws, PosteriorSummary};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Linear interpolation between order statistics (`(n - 1) q` positions).
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Pools all chains and reports per-coefficient means, medians and
/// equal-tailed intervals at `level`.
pub fn summarize<T: Real>(draws: &[PosteriorDraws<T>], level: f64) -> Result<PosteriorSummary<T>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level must lie in (0, 1), got {level}")));
    }
    let total: usize = draws.iter().map(|d| d.n_draws()).sum();
    if total < 2 {
        return Err(Error::invalid("summary needs at least two retained draws"));
    }
    let p = draws[0].p();
    if draws.iter().any(|d| d.p() != p) {
        return Err(Error::invalid("chains disagree on dimension"));
    }
    let alpha = 1.0 - level;
    let mut buf: Vec<T> = Vec::with_capacity(total);
    let mut coefficients = Vec::with_capacity(p);
    for j in 0..p {
        buf.clear();
        for d in draws {
            buf.extend(d.beta.column(j).iter().copied());
        }
        let mean = buf.iter().copied().sum::<T>() / T::from_usize(total).unwrap();
        buf.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        let lower = quantile_sorted(&buf, alpha / 2.0);
        let upper = quantile_sorted(&buf, 1.0 - alpha / 2.0);
        let median = quantile_sorted(&buf, 0.5);
        coefficients.push(CoefficientSummary {
            mean,
            median,
            lower,
            upper,
            selected: lower > T::zero() || upper < T::zero(),
        });
    }
    Ok(PosteriorSummary {
        level: T::lit(level),
        coefficients,
    })
}
