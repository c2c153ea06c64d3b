//! Two-parameter probit regression of observation indicators on intensity:
//! `P(observed | y) = Phi(a + b*y)`, fit by Fisher scoring with step
//! halving. The fitted (a, b) and the inverse information feed the
//! bivariate-normal approximation of the mechanism posterior.

use rand::Rng;

use crate::dists::{invert2, mvn2_sample};
use crate::error::{Error, SeparationDirection};
use crate::normal;
use crate::Result;

const MAX_ITERATIONS: usize = 100;
const STEP_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-8;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;
/// Precision of the weak N(0, 10000) prior on each of (a, b).
const PRIOR_PRECISION: f64 = 1e-4;

/// Result of a probit fit.
#[derive(Debug, Clone)]
pub struct ProbitFit {
    pub a_hat: f64,
    pub b_hat: f64,
    /// Inverse Fisher information at the optimum.
    pub cov: [[f64; 2]; 2],
    pub converged: bool,
    pub iterations: usize,
}

/// Maximize the probit log-likelihood over `(a, b)` for response pairs
/// `(y, observed)`.
///
/// Requires at least two distinct `y` values (else the slope is
/// unidentifiable: singular information) and both response values present.
/// Perfect separation is detected up front and reported with its
/// direction; the caller decides how to recover.
pub fn fit_probit(pairs: &[(f64, bool)]) -> Result<ProbitFit> {
    fit_probit_traced(pairs, None).map(|(fit, _)| fit)
}

/// Same fit, warm-started from `start = [a, b]`.
pub fn fit_probit_from(pairs: &[(f64, bool)], start: [f64; 2]) -> Result<ProbitFit> {
    fit_probit_traced(pairs, Some(start)).map(|(fit, _)| fit)
}

pub(crate) fn fit_probit_traced(
    pairs: &[(f64, bool)],
    start: Option<[f64; 2]>,
) -> Result<(ProbitFit, Vec<f64>)> {
    let n_obs = pairs.iter().filter(|(_, r)| *r).count();
    if n_obs == 0 || n_obs == pairs.len() {
        return Err(Error::DegenerateResponses);
    }
    let y_min = pairs.iter().map(|(y, _)| *y).fold(f64::INFINITY, f64::min);
    let y_max = pairs
        .iter()
        .map(|(y, _)| *y)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(y_min.is_finite() && y_max.is_finite()) {
        return Err(Error::Parameter("non-finite intensity in probit fit".into()));
    }
    if y_min == y_max {
        return Err(Error::SingularInformation);
    }
    check_separation(pairs)?;

    let mut theta = start.unwrap_or_else(|| {
        let p_bar =
            (n_obs as f64 / pairs.len() as f64).clamp(1e-3, 1.0 - 1e-3);
        [normal::quantile(p_bar), 0.0]
    });
    let mut ll = log_likelihood(pairs, theta);
    let mut ll_path = vec![ll];
    let mut iterations = 0;
    let mut step_converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (grad, info) = score_and_information(pairs, theta);
        let info_inv = invert2(info)?;
        let mut step = [
            info_inv[0][0] * grad[0] + info_inv[0][1] * grad[1],
            info_inv[1][0] * grad[0] + info_inv[1][1] * grad[1],
        ];
        if !(step[0].is_finite() && step[1].is_finite()) {
            return Err(Error::SingularInformation);
        }

        // Step-halve until the log-likelihood does not decrease.
        let mut candidate = [theta[0] + step[0], theta[1] + step[1]];
        let mut ll_new = log_likelihood(pairs, candidate);
        let mut halvings = 0;
        while ll_new < ll - 1e-12 && halvings < 50 {
            step[0] *= 0.5;
            step[1] *= 0.5;
            candidate = [theta[0] + step[0], theta[1] + step[1]];
            ll_new = log_likelihood(pairs, candidate);
            halvings += 1;
        }
        theta = candidate;
        ll = ll.max(ll_new);
        ll_path.push(ll);

        if step[0].abs().max(step[1].abs()) < STEP_TOL {
            step_converged = true;
            break;
        }
    }

    let (grad, info) = score_and_information(pairs, theta);
    let grad_norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    let cov = invert2(info)?;
    let fit = ProbitFit {
        a_hat: theta[0],
        b_hat: theta[1],
        cov,
        converged: step_converged && grad_norm < GRAD_TOL,
        iterations,
    };
    Ok((fit, ll_path))
}

fn check_separation(pairs: &[(f64, bool)]) -> Result<()> {
    let mut obs_min = f64::INFINITY;
    let mut obs_max = f64::NEG_INFINITY;
    let mut miss_min = f64::INFINITY;
    let mut miss_max = f64::NEG_INFINITY;
    for &(y, r) in pairs {
        if r {
            obs_min = obs_min.min(y);
            obs_max = obs_max.max(y);
        } else {
            miss_min = miss_min.min(y);
            miss_max = miss_max.max(y);
        }
    }
    if obs_min >= miss_max {
        return Err(Error::Separation(SeparationDirection::ObservedHigh));
    }
    if obs_max <= miss_min {
        return Err(Error::Separation(SeparationDirection::ObservedLow));
    }
    Ok(())
}

/// Probit log-likelihood at `(a, b)`.
pub fn log_likelihood(pairs: &[(f64, bool)], theta: [f64; 2]) -> f64 {
    let [a, b] = theta;
    pairs
        .iter()
        .map(|&(y, r)| {
            let eta = a + b * y;
            if r {
                normal::ln_cdf(eta)
            } else {
                normal::ln_cdf(-eta)
            }
        })
        .sum()
}

// Score vector and expected (Fisher) information. Ratios are formed in log
// space so extreme linear predictors stay finite.
fn score_and_information(pairs: &[(f64, bool)], theta: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let [a, b] = theta;
    let mut grad = [0.0; 2];
    let mut info = [[0.0; 2]; 2];
    for &(y, r) in pairs {
        let eta = a + b * y;
        let ln_phi = -0.5 * eta * eta - LN_SQRT_2PI;
        let ln_p = normal::ln_cdf(eta);
        let ln_q = normal::ln_cdf(-eta);
        let score = if r {
            (ln_phi - ln_p).exp()
        } else {
            -(ln_phi - ln_q).exp()
        };
        let w = (2.0 * ln_phi - ln_p - ln_q).exp();
        grad[0] += score;
        grad[1] += score * y;
        info[0][0] += w;
        info[0][1] += w * y;
        info[1][1] += w * y * y;
    }
    info[1][0] = info[0][1];
    (grad, info)
}

/// One draw from the bivariate-normal approximation of the mechanism
/// posterior: centered at the fit, covariance the inverse of the Fisher
/// information with the weak-prior precision `1e-4` added to its diagonal.
/// A non-positive-definite covariance gets one shot of `1e-10 I` jitter.
pub fn sample_ab_posterior<R: Rng + ?Sized>(fit: &ProbitFit, rng: &mut R) -> Result<(f64, f64)> {
    if !fit.converged {
        return Err(Error::Parameter(
            "mechanism posterior requires a converged probit fit".into(),
        ));
    }
    let info = invert2(fit.cov)?;
    let post_info = [
        [info[0][0] + PRIOR_PRECISION, info[0][1]],
        [info[1][0], info[1][1] + PRIOR_PRECISION],
    ];
    let post_cov = invert2(post_info)?;
    let mean = [fit.a_hat, fit.b_hat];
    match mvn2_sample(mean, post_cov, rng) {
        Ok([a, b]) => Ok((a, b)),
        Err(Error::NotPositiveDefinite) => {
            let jittered = [
                [post_cov[0][0] + 1e-10, post_cov[0][1]],
                [post_cov[1][0], post_cov[1][1] + 1e-10],
            ];
            let [a, b] = mvn2_sample(mean, jittered, rng)?;
            Ok((a, b))
        }
        Err(e) => Err(e),
    }
}
