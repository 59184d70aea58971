//! Full-conditional updates.

use ndarray::Array1;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::{prior_mean, ChainState, Design};
use crate::error::{Error, Result};
use crate::guide::GuideSet;
use crate::linalg::Cholesky;
use crate::scalar::Real;

/// Additive floor on Dirichlet proposal concentrations.
pub const ETA_PROPOSAL_FLOOR: f64 = 0.1;

/// Above this dimension the coefficient draw switches to the n-dimensional
/// system.
pub const WOODBURY_MIN_P: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaMethod {
    /// Cholesky of the `p x p` precision for `p <= WOODBURY_MIN_P`, else Woodbury.
    #[default]
    Auto,
    Cholesky,
    /// Solves an `n x n` system; exact for any `n`, cheaper when `p >> n`.
    Woodbury,
}

fn scale_bounds<T: Real>() -> (T, T) {
    let lo = T::min_positive_value().sqrt();
    (lo, lo.recip())
}

#[inline]
fn clamp_scale<T: Real>(v: T) -> T {
    let (lo, hi) = scale_bounds::<T>();
    v.max(lo).min(hi)
}

/// Draws from the inverse-gamma distribution with the given shape and rate.
pub fn sample_inverse_gamma<T: Real, R: Rng + ?Sized>(shape: T, rate: T, rng: &mut R) -> Result<T> {
    if !(shape > T::zero()) || !shape.is_finite() {
        return Err(Error::Numerical(format!("inverse-gamma shape {shape}")));
    }
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(Error::Numerical(format!("inverse-gamma rate {rate}")));
    }
    let g = T::sample_gamma(shape, rng);
    Ok((rate / g).min(T::max_value()))
}

fn prior_precisions<T: Real>(state: &ChainState<T>, tau: T) -> Result<Array1<T>> {
    let tau2 = tau * tau;
    let prec = state.lambda2.mapv(|l2| (tau2 * l2).recip());
    if prec.iter().any(|v| !v.is_finite() || !(*v > T::zero())) {
        return Err(Error::Numerical(format!(
            "degenerate prior precision (tau = {tau})"
        )));
    }
    Ok(prec)
}

/// Builds `Q = X'X + diag(1 / (tau^2 lambda^2))` and `b = X'(y - a) + Q_prior m`.
/// The conditional precision of beta is `Q / sigma^2` and its mean `Q^{-1} b`.
fn precision_system<T: Real>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
) -> Result<(Cholesky<T>, Array1<T>)> {
    let p = design.p();
    let m = prior_mean(guide, &state.eta);
    let prec = prior_precisions(state, guide.tau)?;
    let a = state.intercept_value();
    let mut q = design.xtx.clone();
    let mut b = Array1::zeros(p);
    for j in 0..p {
        q[[j, j]] = q[[j, j]] + prec[j];
        b[j] = design.xty[j] - a * design.col_sums[j] + prec[j] * m[j];
    }
    let chol = Cholesky::new(q.view())?;
    Ok((chol, b))
}

/// Mean of the Gaussian full conditional of beta, via the `p x p` precision.
pub fn beta_conditional_mean<T: Real>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
) -> Result<Array1<T>> {
    let (chol, b) = precision_system(state, guide, design)?;
    Ok(chol.solve(&b))
}

/// Same mean computed through the `n x n` system.
pub fn beta_conditional_mean_woodbury<T: Real>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
) -> Result<Array1<T>> {
    let (m, d, chol) = woodbury_system(state, guide, design)?;
    let resid = offset_residual(state, design, &m);
    let w = chol.solve(&resid);
    let xtw = design.x.t().dot(&w);
    Ok(&m + &(&d * &xtw))
}

fn offset_residual<T: Real>(state: &ChainState<T>, design: &Design<T>, m: &Array1<T>) -> Array1<T> {
    design.residuals(m, state.intercept_value())
}

/// Prior mean `m`, prior variances `tau^2 lambda^2` and the factor of `X D X' + I`.
fn woodbury_system<T: Real>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
) -> Result<(Array1<T>, Array1<T>, Cholesky<T>)> {
    let m = prior_mean(guide, &state.eta);
    let tau2 = guide.tau * guide.tau;
    let d = state.lambda2.mapv(|l2| tau2 * l2);
    if d.iter().any(|v| !v.is_finite() || !(*v > T::zero())) {
        return Err(Error::Numerical("degenerate prior variance".into()));
    }
    let n = design.n();
    // X D X' + I
    let xd = &design.x * &d.view().insert_axis(ndarray::Axis(0));
    let mut mtx = xd.dot(&design.x.t());
    for i in 0..n {
        mtx[[i, i]] = mtx[[i, i]] + T::one();
    }
    let chol = Cholesky::new(mtx.view())?;
    Ok((m, d, chol))
}

/// One exact draw of beta from its Gaussian full conditional.
pub fn sample_beta_conditional<T: Real, R: Rng + ?Sized>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
    rng: &mut R,
) -> Result<Array1<T>> {
    sample_beta_with(BetaMethod::Auto, state, guide, design, rng)
}

pub fn sample_beta_with<T: Real, R: Rng + ?Sized>(
    method: BetaMethod,
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
    rng: &mut R,
) -> Result<Array1<T>> {
    let use_woodbury = match method {
        BetaMethod::Auto => design.p() > WOODBURY_MIN_P,
        BetaMethod::Cholesky => false,
        BetaMethod::Woodbury => true,
    };
    let sigma = state.sigma2.sqrt();
    if use_woodbury {
        let (m, d, chol) = woodbury_system(state, guide, design)?;
        let u: Array1<T> = d.mapv(|dj| sigma * dj.sqrt() * T::sample_standard_normal(rng));
        let delta: Array1<T> = (0..design.n()).map(|_| T::sample_standard_normal(rng)).collect();
        // v = X u / sigma + delta ; w = M^{-1} (r / sigma - v)
        let v = design.x.dot(&u).mapv(|t| t / sigma) + &delta;
        let resid = offset_residual(state, design, &m);
        let rhs = resid.mapv(|t| t / sigma) - &v;
        let w = chol.solve(&rhs);
        let xtw = design.x.t().dot(&w);
        let shift = (&d * &xtw).mapv(|t| t * sigma);
        Ok(&m + &u + &shift)
    } else {
        let (chol, b) = precision_system(state, guide, design)?;
        // beta = L^{-T} (L^{-1} b + sigma z)
        let mut x = b.to_vec();
        chol.solve_lower_in_place(&mut x);
        for xi in x.iter_mut() {
            *xi = *xi + sigma * T::sample_standard_normal(rng);
        }
        chol.solve_upper_in_place(&mut x);
        Ok(Array1::from(x))
    }
}

/// Updates `(lambda_j^2, nu_j)` for every coordinate:
/// `lambda_j^2 ~ IG(1, 1/nu_j + r_j^2 / (2 sigma^2 tau^2))`, then
/// `nu_j ~ IG(1, 1 + 1/lambda_j^2)` with `r = beta - m`.
pub fn sample_lambda_conditional<T: Real, R: Rng + ?Sized>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    rng: &mut R,
) -> Result<(Array1<T>, Array1<T>)> {
    let m = prior_mean(guide, &state.eta);
    let two = T::lit(2.0);
    let denom = two * state.sigma2 * guide.tau * guide.tau;
    let p = state.beta.len();
    let mut lambda2 = Array1::zeros(p);
    let mut aux = Array1::zeros(p);
    for j in 0..p {
        let r = state.beta[j] - m[j];
        let rate = state.aux_nu[j].recip() + r * r / denom;
        let l2 = clamp_scale(sample_inverse_gamma(T::one(), rate, rng)?);
        let nu = clamp_scale(sample_inverse_gamma(T::one(), T::one() + l2.recip(), rng)?);
        lambda2[j] = l2;
        aux[j] = nu;
    }
    Ok((lambda2, aux))
}

/// `sigma^2 ~ IG(nu + n/2 + p/2, nu + |y - X beta - a|^2 / 2 + sum_j r_j^2 / (2 tau^2 lambda_j^2))`.
pub fn sample_sigma2_conditional<T: Real, R: Rng + ?Sized>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
    nu: T,
    rng: &mut R,
) -> Result<T> {
    let (shape, rate) = sigma2_parameters(state, guide, design, nu);
    let s2 = sample_inverse_gamma(shape, rate, rng)?;
    Ok(s2.max(T::min_positive_value()))
}

pub(crate) fn sigma2_parameters<T: Real>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    design: &Design<T>,
    nu: T,
) -> (T, T) {
    let half = T::lit(0.5);
    let n = T::from_usize(design.n()).unwrap();
    let p = T::from_usize(state.beta.len()).unwrap();
    let shape = nu + half * n + half * p;
    let ssr = if design.n() > 0 {
        let r = design.residuals(&state.beta, state.intercept_value());
        r.dot(&r)
    } else {
        T::zero()
    };
    let m = prior_mean(guide, &state.eta);
    let tau2 = guide.tau * guide.tau;
    let prior_ss = state
        .beta
        .iter()
        .zip(m.iter())
        .zip(state.lambda2.iter())
        .map(|((b, mj), l2)| (*b - *mj) * (*b - *mj) / (tau2 * *l2))
        .sum::<T>();
    (shape, nu + half * ssr + half * prior_ss)
}

/// Flat-prior intercept: `N(mean(y - X beta), sigma^2 / n)`.
pub fn sample_intercept_conditional<T: Real, R: Rng + ?Sized>(
    state: &ChainState<T>,
    design: &Design<T>,
    rng: &mut R,
) -> Result<T> {
    let n = design.n();
    if n == 0 {
        return Err(Error::Numerical("intercept has no data (improper conditional)".into()));
    }
    let nf = T::from_usize(n).unwrap();
    let fitted_sum = crate::scalar::dot(
        design.col_sums.as_slice().expect("contiguous"),
        state.beta.as_slice().expect("contiguous"),
    );
    let mean = (design.y_sum - fitted_sum) / nf;
    Ok(mean + (state.sigma2 / nf).sqrt() * T::sample_standard_normal(rng))
}

/// Log density of `Dirichlet(alpha)` at `x`.
pub fn log_dirichlet_density<T: Real>(x: &Array1<T>, alpha: &Array1<T>) -> T {
    let a0: f64 = alpha.iter().map(|a| a.as_f64()).sum();
    let mut lp = ln_gamma(a0);
    for (xk, ak) in x.iter().zip(alpha.iter()) {
        let ak = ak.as_f64();
        lp += (ak - 1.0) * xk.as_f64().ln() - ln_gamma(ak);
    }
    T::lit(lp)
}

/// Normalised gamma draws. Returns `None` if a component underflows to zero.
pub fn sample_dirichlet<T: Real, R: Rng + ?Sized>(alpha: &Array1<T>, rng: &mut R) -> Option<Array1<T>> {
    let g: Array1<T> = alpha.mapv(|a| T::sample_gamma(a, rng));
    let total = g.sum();
    if !(total > T::zero()) || !total.is_finite() {
        return None;
    }
    let x = g.mapv(|v| v / total);
    x.iter().all(|v| *v > T::zero()).then_some(x)
}

fn eta_log_target<T: Real>(eta: &Array1<T>, state: &ChainState<T>, guide: &GuideSet<T>) -> T {
    let conc = guide.concentrations();
    let mut lp = T::zero();
    for (e, a) in eta.iter().zip(conc.iter()) {
        lp = lp + (*a - T::one()) * e.ln();
    }
    let m = prior_mean(guide, eta);
    let two = T::lit(2.0);
    let scale = state.sigma2 * guide.tau * guide.tau;
    let ll = state
        .beta
        .iter()
        .zip(m.iter())
        .zip(state.lambda2.iter())
        .map(|((b, mj), l2)| (*b - *mj) * (*b - *mj) / (two * scale * *l2))
        .sum::<T>();
    lp - ll
}

fn proposal_concentration<T: Real>(eta: &Array1<T>, c: T) -> Array1<T> {
    let floor = T::lit(ETA_PROPOSAL_FLOOR);
    eta.mapv(|e| c * e + floor)
}

/// Log Metropolis-Hastings ratio for moving the simplex weights from
/// `current` to `proposal`, including both proposal densities.
pub fn eta_log_acceptance_ratio<T: Real>(
    current: &Array1<T>,
    proposal: &Array1<T>,
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    concentration: T,
) -> T {
    let forward = log_dirichlet_density(proposal, &proposal_concentration(current, concentration));
    let backward = log_dirichlet_density(current, &proposal_concentration(proposal, concentration));
    eta_log_target(proposal, state, guide) - eta_log_target(current, state, guide) + backward - forward
}

/// One Metropolis step on the simplex weights. Without sources the weights
/// are the degenerate `(1)` and no step is taken.
pub fn sample_eta_mh<T: Real, R: Rng + ?Sized>(
    state: &ChainState<T>,
    guide: &GuideSet<T>,
    concentration: T,
    rng: &mut R,
) -> (Array1<T>, bool) {
    if guide.n_sources() == 0 {
        return (Array1::from_elem(1, T::one()), false);
    }
    let current = &state.eta;
    let alpha = proposal_concentration(current, concentration);
    let Some(proposal) = sample_dirichlet(&alpha, rng) else {
        return (current.clone(), false);
    };
    let log_ratio = eta_log_acceptance_ratio(current, &proposal, state, guide, concentration);
    let u = T::sample_open01(rng);
    if log_ratio.is_finite() && u.ln() < log_ratio {
        (proposal, true)
    } else {
        (current.clone(), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    fn guide_with_sources() -> GuideSet<f64> {
        let mut g = GuideSet::empty(3, 0.5, 1.0);
        g.omega_tilde = array![[0.4, -0.2, 0.1], [0.3, 0.0, -0.3]];
        g.theta = array![0.8, 0.3];
        g
    }

    fn state(p: usize, k1: usize) -> ChainState<f64> {
        ChainState {
            beta: Array1::zeros(p),
            intercept: None,
            sigma2: 1.0,
            lambda2: Array1::ones(p),
            aux_nu: Array1::ones(p),
            eta: Array1::from_elem(k1, 1.0 / k1 as f64),
        }
    }

    #[test]
    fn sigma2_perfect_fit_parameters() {
        let g = guide_with_sources();
        let mut s = state(3, 3);
        s.beta = prior_mean(&g, &s.eta);
        let x = array![[1.0, 0.0, 2.0], [0.5, 1.0, -1.0], [0.0, 3.0, 1.0], [1.0, 1.0, 1.0]];
        let y = x.dot(&s.beta);
        let d = Design::new(x, y, false).unwrap();
        let (shape, rate) = sigma2_parameters(&s, &g, &d, 0.01);
        assert_eq!(shape, 0.01 + 2.0 + 1.5);
        assert!((rate - 0.01).abs() < 1e-14);
    }

    #[test]
    fn sigma2_without_data_is_the_prior() {
        let g = GuideSet::<f64>::empty(0, 1.0, 1.0);
        let s = state(0, 1);
        let (shape, rate) = sigma2_parameters(&s, &g, &Design::empty(0), 0.01);
        assert_eq!((shape, rate), (0.01, 0.01));
    }

    #[test]
    fn proposal_equal_to_current_is_always_accepted() {
        let g = guide_with_sources();
        let mut s = state(3, 3);
        s.beta = array![0.3, 0.1, -0.2];
        s.eta = array![0.2, 0.5, 0.3];
        let r = eta_log_acceptance_ratio(&s.eta, &s.eta.clone(), &s, &g, 50.0);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn no_sources_keeps_degenerate_weights() {
        let g = GuideSet::<f64>::empty(3, 0.5, 1.0);
        let s = state(3, 1);
        let mut r = rng::stream(1, &[]);
        assert_eq!(sample_eta_mh(&s, &g, 50.0, &mut r), (array![1.0], false));
    }

    #[test]
    fn local_scales_are_positive() {
        let g = guide_with_sources();
        let mut s = state(3, 3);
        s.beta = array![1e6, 0.0, -1e-6];
        let mut r = rng::stream(2, &[]);
        for _ in 0..1000 {
            let (l2, nu) = sample_lambda_conditional(&s, &g, &mut r).unwrap();
            assert!(l2.iter().chain(nu.iter()).all(|v| *v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn intercept_needs_rows() {
        let s = state(2, 1);
        let mut r = rng::stream(3, &[]);
        assert!(sample_intercept_conditional(&s, &Design::<f64>::empty(2), &mut r).is_err());
    }

    #[test]
    fn inverse_gamma_rejects_bad_parameters() {
        let mut r = rng::stream(4, &[]);
        assert!(sample_inverse_gamma(0.0, 1.0, &mut r).is_err());
        assert!(sample_inverse_gamma(1.0, f64::NAN, &mut r).is_err());
        assert!(sample_inverse_gamma(1.0, 1.0, &mut r).unwrap() > 0.0);
    }

    #[test]
    fn degenerate_prior_scale_reports_pivot_or_numerical_error() {
        let g = GuideSet::<f64>::empty(2, 0.5, 1.0);
        let mut s = state(2, 1);
        s.lambda2[1] = 0.0;
        let d = Design::new(array![[1.0, 0.0], [0.0, 1.0]], array![1.0, 1.0], false).unwrap();
        let mut r = rng::stream(5, &[]);
        let e = sample_beta_conditional(&s, &g, &d, &mut r).unwrap_err();
        assert!(e.is_numerical());
    }
}
