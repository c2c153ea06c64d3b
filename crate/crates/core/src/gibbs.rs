//! Gibbs samplers for the midpoint mixed model: M5 (probit missingness
//! mechanism, data augmentation over missing intensities) and M3 (the
//! ignorable variant: missing values are imputed from the untilted normal
//! conditional and the mechanism update is skipped).
//!
//! Sweep order per iteration: impute all missing intensities, update all
//! peptide midpoints `alpha`, update all fold changes `mu`, then the
//! variance components `tau, xi, sigma`, the means `beta_alpha, beta_mu`,
//! and finally the mechanism `(a, b)` (M5 only). The local updates for
//! different proteins are conditionally independent given the
//! hyperparameters, so they run in parallel on per-protein RNG substreams
//! keyed by protein id; results are identical for any thread count and any
//! input protein order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ProteinCategory, Sample};
use crate::dists::{inverse_gamma_sample, ExtendedSkewNormal, InverseGammaParams};
use crate::error::Error;
use crate::probit::{fit_probit_traced, sample_ab_posterior};
use crate::rng::{keyed_substream, substream};
use crate::Result;

const IG_PRIOR_SHAPE: f64 = 0.001;
const IG_PRIOR_RATE: f64 = 0.001;
/// Precision of the N(0, 10000) priors on beta_alpha and beta_mu.
const MEAN_PRIOR_PRECISION: f64 = 1e-4;
/// Variance floor for method-of-moments initialization.
const INIT_VAR_FLOOR: f64 = 1e-4;
const CI_LOWER_Q: f64 = 0.025;
const CI_UPPER_Q: f64 = 0.975;
const HEARTBEAT_EVERY: usize = 100;

/// The hyperparameter vector `theta = (a, b, tau, xi, sigma, beta_alpha,
/// beta_mu)`. `tau`, `xi`, `sigma` are variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mechanism intercept.
    pub a: f64,
    /// Mechanism slope.
    pub b: f64,
    /// Variance of protein fold changes.
    pub tau: f64,
    /// Variance of peptide midpoints.
    pub xi: f64,
    /// Residual variance.
    pub sigma: f64,
    /// Mean peptide midpoint.
    pub beta_alpha: f64,
    /// Mean protein fold change.
    pub beta_mu: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.a.is_finite()
            && self.b.is_finite()
            && self.tau.is_finite()
            && self.xi.is_finite()
            && self.sigma.is_finite()
            && self.beta_alpha.is_finite()
            && self.beta_mu.is_finite();
        if !finite || self.tau <= 0.0 || self.xi <= 0.0 || self.sigma <= 0.0 {
            return Err(Error::Parameter(format!(
                "invalid model parameters: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which sampler variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    M5,
    M3,
}

/// Chain configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub thin: usize,
    pub model: Model,
}

impl ChainConfig {
    pub fn new(model: Model, seed: u64) -> Self {
        ChainConfig {
            n_iterations: 1000,
            burn_in: 500,
            seed,
            thin: 1,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iterations {
            return Err(Error::Parameter(format!(
                "burn_in {} must be < n_iterations {}",
                self.burn_in, self.n_iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Parameter("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// Posterior summary of one protein's log fold change.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub protein_id: String,
    pub post_mean: f64,
    pub post_sd: f64,
    /// Equal-tailed 95% credible bounds from the kept draws.
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub n_kept_draws: usize,
    pub category: ProteinCategory,
}

impl PosteriorSummary {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_lower > 0.0 || self.ci_upper < 0.0
    }
}

/// Ranking statistic: squared posterior mean over posterior SD.
pub fn rank_statistic(s: &PosteriorSummary) -> Result<f64> {
    if s.post_sd <= 0.0 {
        return Err(Error::ZeroPosteriorSd);
    }
    Ok(s.post_mean * s.post_mean / s.post_sd)
}

/// Latent state of one sweep. Indices are aligned with the (sorted)
/// protein order of the chain output; `y_imputed` holds a value exactly
/// where the dataset slot is missing.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub params: ModelParams,
    pub mu: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub y_imputed: Vec<Vec<[Option<f64>; 2]>>,
}

/// Everything a finished chain reports.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Per-protein summaries, sorted by protein id.
    pub summaries: Vec<PosteriorSummary>,
    /// Kept post-burn-in `mu` draws, aligned with `summaries`.
    pub kept_mu: Vec<Vec<f64>>,
    /// Hyperparameters after every sweep (1-based iteration index).
    pub theta_trace: Vec<(usize, ModelParams)>,
    /// State after the final sweep.
    pub final_state: ChainState,
    /// Sweeps in which the mechanism update kept the previous draw
    /// (separation, degenerate responses, or a failed fit).
    pub n_ab_retained: usize,
}

impl ChainOutput {
    pub fn summary(&self, protein_id: &str) -> Option<&PosteriorSummary> {
        self.summaries
            .binary_search_by(|s| s.protein_id.as_str().cmp(protein_id))
            .ok()
            .map(|i| &self.summaries[i])
    }

    pub fn mu_draws(&self, protein_id: &str) -> Option<&[f64]> {
        self.summaries
            .binary_search_by(|s| s.protein_id.as_str().cmp(protein_id))
            .ok()
            .map(|i| self.kept_mu[i].as_slice())
    }

    /// Trace rows (`iteration`, `parameter`, `value`) for the
    /// hyperparameters plus the `mu` chains of the selected proteins.
    pub fn trace_rows(&self, proteins: &[String]) -> Vec<(usize, String, f64)> {
        let mut rows = Vec::new();
        for (it, p) in &self.theta_trace {
            rows.push((*it, "a".to_string(), p.a));
            rows.push((*it, "b".to_string(), p.b));
            rows.push((*it, "tau".to_string(), p.tau));
            rows.push((*it, "xi".to_string(), p.xi));
            rows.push((*it, "sigma".to_string(), p.sigma));
            rows.push((*it, "beta_alpha".to_string(), p.beta_alpha));
            rows.push((*it, "beta_mu".to_string(), p.beta_mu));
        }
        for id in proteins {
            if let Some(draws) = self.mu_draws(id) {
                for (k, v) in draws.iter().enumerate() {
                    rows.push((k + 1, format!("mu:{id}"), *v));
                }
            }
        }
        rows
    }
}

// ---------------------------------------------------------------------------
// Full conditionals (closed forms)
// ---------------------------------------------------------------------------

/// Conditional of a protein fold change given its `m_i` completed pairs:
/// normal with mean `(beta_mu*sigma + (tau/2) * sum_j(y_j1 - y_j2)) /
/// (sigma + m_i*tau/2)` and variance `sigma*tau / (sigma + m_i*tau/2)`.
pub fn mu_conditional(
    beta_mu: f64,
    sigma: f64,
    tau: f64,
    m_i: usize,
    sum_diff: f64,
) -> (f64, f64) {
    let denom = sigma + m_i as f64 * tau / 2.0;
    (
        (beta_mu * sigma + tau / 2.0 * sum_diff) / denom,
        sigma * tau / denom,
    )
}

/// Conditional of a peptide midpoint given its completed pair: normal with
/// mean `(beta_alpha*sigma + xi*(y_1 + y_2)) / (sigma + 2*xi)` and
/// variance `xi*sigma / (sigma + 2*xi)`.
pub fn alpha_conditional(beta_alpha: f64, sigma: f64, xi: f64, pair_sum: f64) -> (f64, f64) {
    let denom = sigma + 2.0 * xi;
    (
        (beta_alpha * sigma + xi * pair_sum) / denom,
        xi * sigma / denom,
    )
}

/// Conjugate posterior of `tau`: `IG(0.001 + n/2, 0.001 + ssd/2)` where
/// `ssd = sum_i (mu_i - beta_mu)^2`.
pub fn tau_posterior(n_proteins: usize, sum_sq_dev: f64) -> InverseGammaParams {
    InverseGammaParams {
        shape: IG_PRIOR_SHAPE + n_proteins as f64 / 2.0,
        rate: IG_PRIOR_RATE + sum_sq_dev / 2.0,
    }
}

/// Conjugate posterior of `xi` over all peptides.
pub fn xi_posterior(n_peptides: usize, sum_sq_dev: f64) -> InverseGammaParams {
    InverseGammaParams {
        shape: IG_PRIOR_SHAPE + n_peptides as f64 / 2.0,
        rate: IG_PRIOR_RATE + sum_sq_dev / 2.0,
    }
}

/// Conjugate posterior of `sigma` over all `2*sum(m_i)` residuals.
pub fn sigma_posterior(n_slots: usize, sum_sq_resid: f64) -> InverseGammaParams {
    InverseGammaParams {
        shape: IG_PRIOR_SHAPE + n_slots as f64 / 2.0,
        rate: IG_PRIOR_RATE + sum_sq_resid / 2.0,
    }
}

/// Conjugate posterior of a mean parameter under its N(0, 10000) prior:
/// precision `1e-4 + n/variance`, mean `(sum/variance) / precision`.
/// Returns `(mean, variance)` of the posterior normal.
pub fn mean_posterior(sum: f64, n: usize, variance: f64) -> (f64, f64) {
    let precision = MEAN_PRIOR_PRECISION + n as f64 / variance;
    ((sum / variance) / precision, 1.0 / precision)
}

// ---------------------------------------------------------------------------
// Elementary draws (used by the sweep and directly testable)
// ---------------------------------------------------------------------------

fn draw_normal<R: Rng + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + variance.sqrt() * z
}

/// One draw of a protein fold change from its full conditional.
pub fn draw_mu<R: Rng + ?Sized>(
    beta_mu: f64,
    sigma: f64,
    tau: f64,
    m_i: usize,
    sum_diff: f64,
    rng: &mut R,
) -> f64 {
    let (mean, var) = mu_conditional(beta_mu, sigma, tau, m_i, sum_diff);
    draw_normal(mean, var, rng)
}

/// One draw of a peptide midpoint from its full conditional.
pub fn draw_alpha<R: Rng + ?Sized>(
    beta_alpha: f64,
    sigma: f64,
    xi: f64,
    pair_sum: f64,
    rng: &mut R,
) -> f64 {
    let (mean, var) = alpha_conditional(beta_alpha, sigma, xi, pair_sum);
    draw_normal(mean, var, rng)
}

/// One draw of a missing intensity. Under M5 the conditional is the
/// extended skew-normal at `mu_x = alpha + sign(sample)*mu/2` with the
/// current mechanism `(a, b)`; under M3 the tilt is off and the draw is
/// plain normal.
pub fn draw_missing<R: Rng + ?Sized>(
    alpha_j: f64,
    mu_i: f64,
    sample: Sample,
    params: &ModelParams,
    model: Model,
    rng: &mut R,
) -> Result<f64> {
    let mu_x = alpha_j + sample.sign() * mu_i / 2.0;
    let (a, b) = match model {
        Model::M5 => (params.a, params.b),
        Model::M3 => (0.0, 0.0),
    };
    let esn = ExtendedSkewNormal::new(mu_x, params.sigma, a, b)?;
    Ok(esn.sample(rng))
}

// ---------------------------------------------------------------------------
// Chain machinery
// ---------------------------------------------------------------------------

struct PeptideWork {
    y: [f64; 2],
    observed: [bool; 2],
}

struct ProteinWork {
    id: String,
    category: ProteinCategory,
    peptides: Vec<PeptideWork>,
    alpha: Vec<f64>,
    mu: f64,
    rng: ChaCha8Rng,
    kept: Vec<f64>,
}

impl ProteinWork {
    fn sweep_local(&mut self, params: &ModelParams, model: Model) -> Result<()> {
        // (1) impute missing intensities
        for (j, pep) in self.peptides.iter_mut().enumerate() {
            for (k, sample) in Sample::BOTH.iter().enumerate() {
                if !pep.observed[k] {
                    pep.y[k] = draw_missing(
                        self.alpha[j],
                        self.mu,
                        *sample,
                        params,
                        model,
                        &mut self.rng,
                    )?;
                }
            }
        }
        // (2) update midpoints
        for (j, pep) in self.peptides.iter().enumerate() {
            self.alpha[j] = draw_alpha(
                params.beta_alpha,
                params.sigma,
                params.xi,
                pep.y[0] + pep.y[1],
                &mut self.rng,
            );
        }
        // (3) update the fold change
        let sum_diff: f64 = self.peptides.iter().map(|p| p.y[0] - p.y[1]).sum();
        self.mu = draw_mu(
            params.beta_mu,
            params.sigma,
            params.tau,
            self.peptides.len(),
            sum_diff,
            &mut self.rng,
        );
        Ok(())
    }

    fn sum_sq_resid(&self, mu: f64) -> f64 {
        let mut sse = 0.0;
        for (j, pep) in self.peptides.iter().enumerate() {
            for (k, sample) in Sample::BOTH.iter().enumerate() {
                let e = pep.y[k] - self.alpha[j] - sample.sign() * mu / 2.0;
                sse += e * e;
            }
        }
        sse
    }
}

/// Run the M3 variant (mechanism off) with otherwise identical machinery.
pub fn m3_variant(ds: &Dataset, cfg: &ChainConfig) -> Result<ChainOutput> {
    let cfg = ChainConfig {
        model: Model::M3,
        ..*cfg
    };
    run_chain(ds, &cfg)
}

/// Run one chain and summarize the post-burn-in, thinned fold-change
/// draws. The dataset must contain no `Missing`-category proteins (drop
/// them first); observed intensities are never modified.
pub fn run_chain(ds: &Dataset, cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    if ds.proteins.is_empty() {
        return Err(Error::Parameter("empty dataset".into()));
    }
    if let Some(g) = ds
        .proteins
        .iter()
        .find(|g| g.category == ProteinCategory::Missing)
    {
        return Err(Error::Parameter(format!(
            "protein {} has no observed intensities; drop Missing proteins before sampling",
            g.protein_id
        )));
    }

    // Canonical order: sorted by protein id. Together with id-keyed RNG
    // substreams this makes every result independent of input order.
    let mut order: Vec<usize> = (0..ds.proteins.len()).collect();
    order.sort_by(|&i, &j| ds.proteins[i].protein_id.cmp(&ds.proteins[j].protein_id));

    let mut workers: Vec<ProteinWork> = order
        .iter()
        .map(|&i| {
            let g = &ds.proteins[i];
            let peptides = g
                .peptides
                .iter()
                .map(|p| PeptideWork {
                    y: [p.y_a.unwrap_or(0.0), p.y_b.unwrap_or(0.0)],
                    observed: [p.y_a.is_some(), p.y_b.is_some()],
                })
                .collect();
            ProteinWork {
                id: g.protein_id.clone(),
                category: g.category,
                peptides,
                alpha: vec![0.0; g.peptides.len()],
                mu: 0.0,
                rng: keyed_substream(cfg.seed, "protein", &g.protein_id),
                kept: Vec::new(),
            }
        })
        .collect();

    let mut params = initialize(&mut workers, cfg.model);
    let mut theta_rng = substream(cfg.seed, "theta");

    let n_kept_target = (cfg.n_iterations - cfg.burn_in).div_ceil(cfg.thin);
    for w in &mut workers {
        w.kept.reserve(n_kept_target);
    }

    let n_proteins = workers.len();
    let n_peptides: usize = workers.iter().map(|w| w.peptides.len()).sum();
    let n_slots = 2 * n_peptides;
    let mut probit_pairs: Vec<(f64, bool)> = Vec::with_capacity(n_slots);
    let mut theta_trace = Vec::with_capacity(cfg.n_iterations);
    let mut n_ab_retained = 0;

    for it in 1..=cfg.n_iterations {
        // (1)-(3): per-protein conditionals, independent given theta.
        let sweep_result: Result<()> = workers
            .par_iter_mut()
            .with_min_len(16)
            .map(|w| w.sweep_local(&params, cfg.model))
            .collect();
        sweep_result.map_err(|e| Error::ChainAborted {
            iteration: it,
            reason: e.to_string(),
        })?;

        // (4) variance components, in canonical order for determinism.
        let ssd_mu: f64 = workers
            .iter()
            .map(|w| (w.mu - params.beta_mu).powi(2))
            .sum();
        let ssd_alpha: f64 = workers
            .iter()
            .flat_map(|w| w.alpha.iter())
            .map(|a| (a - params.beta_alpha).powi(2))
            .sum();
        let sse: f64 = workers.iter().map(|w| w.sum_sq_resid(w.mu)).sum();
        params.tau = inverse_gamma_sample(tau_posterior(n_proteins, ssd_mu), &mut theta_rng);
        params.xi = inverse_gamma_sample(xi_posterior(n_peptides, ssd_alpha), &mut theta_rng);
        params.sigma = inverse_gamma_sample(sigma_posterior(n_slots, sse), &mut theta_rng);

        // (5) means
        let sum_mu: f64 = workers.iter().map(|w| w.mu).sum();
        let (m, v) = mean_posterior(sum_mu, n_proteins, params.tau);
        params.beta_mu = draw_normal(m, v, &mut theta_rng);
        let sum_alpha: f64 = workers.iter().flat_map(|w| w.alpha.iter()).sum();
        let (m, v) = mean_posterior(sum_alpha, n_peptides, params.xi);
        params.beta_alpha = draw_normal(m, v, &mut theta_rng);

        // (6) mechanism (M5 only): probit over every slot, imputations
        // carrying r = false. Separation or any other fit failure keeps
        // the previous draw; that is transient under imputation noise.
        if cfg.model == Model::M5 {
            probit_pairs.clear();
            for w in &workers {
                for pep in &w.peptides {
                    for k in 0..2 {
                        probit_pairs.push((pep.y[k], pep.observed[k]));
                    }
                }
            }
            let updated = fit_probit_traced(&probit_pairs, Some([params.a, params.b]))
                .ok()
                .filter(|(fit, _)| fit.converged)
                .and_then(|(fit, _)| sample_ab_posterior(&fit, &mut theta_rng).ok());
            match updated {
                Some((a, b)) => {
                    params.a = a;
                    params.b = b;
                }
                None => {
                    n_ab_retained += 1;
                    log::debug!("sweep {it}: mechanism update retained previous (a, b)");
                }
            }
        }

        theta_trace.push((it, params));
        if it > cfg.burn_in && (it - cfg.burn_in - 1) % cfg.thin == 0 {
            for w in &mut workers {
                w.kept.push(w.mu);
            }
        }
        if it % HEARTBEAT_EVERY == 0 {
            log::info!(
                "sweep {it}/{}: tau={:.4} xi={:.4} sigma={:.4} beta_alpha={:.3} beta_mu={:.4} a={:.3} b={:.4}",
                cfg.n_iterations,
                params.tau,
                params.xi,
                params.sigma,
                params.beta_alpha,
                params.beta_mu,
                params.a,
                params.b
            );
        }
    }

    let mut summaries = Vec::with_capacity(workers.len());
    let mut kept_mu = Vec::with_capacity(workers.len());
    let mut mu_final = Vec::with_capacity(workers.len());
    let mut alpha_final = Vec::with_capacity(workers.len());
    let mut y_imputed = Vec::with_capacity(workers.len());
    for w in workers {
        summaries.push(summarize(&w.id, w.category, &w.kept));
        mu_final.push(w.mu);
        alpha_final.push(w.alpha.clone());
        y_imputed.push(
            w.peptides
                .iter()
                .map(|p| {
                    [
                        (!p.observed[0]).then_some(p.y[0]),
                        (!p.observed[1]).then_some(p.y[1]),
                    ]
                })
                .collect(),
        );
        kept_mu.push(w.kept);
    }

    Ok(ChainOutput {
        summaries,
        kept_mu,
        theta_trace,
        final_state: ChainState {
            params,
            mu: mu_final,
            alpha: alpha_final,
            y_imputed,
        },
        n_ab_retained,
    })
}

/// Mode-seeking initialization: midpoints from available pair values, fold
/// changes from observed within-pair differences, variances by method of
/// moments (floored), and the mechanism from a probit fit against point
/// imputations at the conditional means.
fn initialize(workers: &mut [ProteinWork], model: Model) -> ModelParams {
    let mut obs_sum = 0.0;
    let mut obs_n = 0usize;
    for w in workers.iter() {
        for pep in &w.peptides {
            for k in 0..2 {
                if pep.observed[k] {
                    obs_sum += pep.y[k];
                    obs_n += 1;
                }
            }
        }
    }
    let grand_mean = if obs_n > 0 { obs_sum / obs_n as f64 } else { 0.0 };

    for w in workers.iter_mut() {
        let mut diff_sum = 0.0;
        let mut diff_n = 0usize;
        for pep in &w.peptides {
            if pep.observed[0] && pep.observed[1] {
                diff_sum += pep.y[0] - pep.y[1];
                diff_n += 1;
            }
        }
        w.mu = if diff_n > 0 {
            diff_sum / diff_n as f64
        } else {
            0.0
        };
        for (j, pep) in w.peptides.iter().enumerate() {
            w.alpha[j] = match (pep.observed[0], pep.observed[1]) {
                (true, true) => (pep.y[0] + pep.y[1]) / 2.0,
                (true, false) => pep.y[0],
                (false, true) => pep.y[1],
                (false, false) => grand_mean,
            };
        }
    }

    // Point-impute missing slots at their conditional means.
    for w in workers.iter_mut() {
        for j in 0..w.peptides.len() {
            for (k, sample) in Sample::BOTH.iter().enumerate() {
                if !w.peptides[j].observed[k] {
                    w.peptides[j].y[k] = w.alpha[j] + sample.sign() * w.mu / 2.0;
                }
            }
        }
    }

    let n = workers.len() as f64;
    let beta_mu = workers.iter().map(|w| w.mu).sum::<f64>() / n;
    let tau = (workers
        .iter()
        .map(|w| (w.mu - beta_mu).powi(2))
        .sum::<f64>()
        / n)
        .max(INIT_VAR_FLOOR);
    let n_pep: usize = workers.iter().map(|w| w.peptides.len()).sum();
    let beta_alpha = workers
        .iter()
        .flat_map(|w| w.alpha.iter())
        .sum::<f64>()
        / n_pep as f64;
    let xi = (workers
        .iter()
        .flat_map(|w| w.alpha.iter())
        .map(|a| (a - beta_alpha).powi(2))
        .sum::<f64>()
        / n_pep as f64)
        .max(INIT_VAR_FLOOR);
    let mut sse = 0.0;
    let mut n_obs_slots = 0usize;
    for w in workers.iter() {
        for (j, pep) in w.peptides.iter().enumerate() {
            for (k, sample) in Sample::BOTH.iter().enumerate() {
                if pep.observed[k] {
                    let e = pep.y[k] - w.alpha[j] - sample.sign() * w.mu / 2.0;
                    sse += e * e;
                    n_obs_slots += 1;
                }
            }
        }
    }
    let sigma = if n_obs_slots > 0 {
        (sse / n_obs_slots as f64).max(INIT_VAR_FLOOR)
    } else {
        INIT_VAR_FLOOR
    };

    let (a, b) = if model == Model::M5 {
        let pairs: Vec<(f64, bool)> = workers
            .iter()
            .flat_map(|w| w.peptides.iter())
            .flat_map(|p| [(p.y[0], p.observed[0]), (p.y[1], p.observed[1])])
            .collect();
        match fit_probit_traced(&pairs, None) {
            Ok((fit, _)) if fit.converged => (fit.a_hat, fit.b_hat),
            _ => (0.0, 0.0),
        }
    } else {
        (0.0, 0.0)
    };

    ModelParams {
        a,
        b,
        tau,
        xi,
        sigma,
        beta_alpha,
        beta_mu,
    }
}

fn summarize(id: &str, category: ProteinCategory, kept: &[f64]) -> PosteriorSummary {
    let n = kept.len();
    let mean = kept.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = kept.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    PosteriorSummary {
        protein_id: id.to_string(),
        post_mean: mean,
        post_sd: sd,
        ci_lower: sample_quantile(&sorted, CI_LOWER_Q),
        ci_upper: sample_quantile(&sorted, CI_UPPER_Q),
        n_kept_draws: n,
        category,
    }
}

// Linearly interpolated sample quantile on pre-sorted data.
fn sample_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}
