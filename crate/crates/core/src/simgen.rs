//! Synthetic data generation, missingness mechanisms, calibration of a
//! mechanism to a target overall missingness rate, and injection of
//! missingness into complete data.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PeptidePair, Sample};
use crate::error::Error;
use crate::gibbs::ModelParams;
use crate::normal;
use crate::Result;

/// Slope scaling that matches the logistic curve's derivative to the
/// probit curve's at the center.
pub const LOGIT_PROBIT_SCALE: f64 = 1.70;

/// Intensity-dependent observation mechanism: the probability a slot is
/// observed given its (possibly unobserved) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MissingnessMechanism {
    /// `P(observed | y) = Phi(a + b*y)`
    ProbitLinear { a: f64, b: f64 },
    /// `P(observed | y) = Phi(a + b*y + c*y^2)`
    ProbitQuadratic { a: f64, b: f64, c: f64 },
    /// `P(observed | y) = 1 / (1 + exp(-(a + b*y)))`
    LogitLinear { a: f64, b: f64 },
}

impl MissingnessMechanism {
    pub fn p_observe(&self, y: f64) -> f64 {
        match *self {
            MissingnessMechanism::ProbitLinear { a, b } => normal::cdf(a + b * y),
            MissingnessMechanism::ProbitQuadratic { a, b, c } => {
                normal::cdf(a + b * y + c * y * y)
            }
            MissingnessMechanism::LogitLinear { a, b } => {
                let eta = a + b * y;
                1.0 / (1.0 + (-eta).exp())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            MissingnessMechanism::ProbitLinear { .. } => "probit",
            MissingnessMechanism::ProbitQuadratic { .. } => "quadratic",
            MissingnessMechanism::LogitLinear { .. } => "logit",
        }
    }

    pub fn intercept(&self) -> f64 {
        match *self {
            MissingnessMechanism::ProbitLinear { a, .. }
            | MissingnessMechanism::ProbitQuadratic { a, .. }
            | MissingnessMechanism::LogitLinear { a, .. } => a,
        }
    }

    pub fn with_intercept(&self, a: f64) -> Self {
        match *self {
            MissingnessMechanism::ProbitLinear { b, .. } => {
                MissingnessMechanism::ProbitLinear { a, b }
            }
            MissingnessMechanism::ProbitQuadratic { b, c, .. } => {
                MissingnessMechanism::ProbitQuadratic { a, b, c }
            }
            MissingnessMechanism::LogitLinear { b, .. } => {
                MissingnessMechanism::LogitLinear { a, b }
            }
        }
    }

    pub fn slope(&self) -> f64 {
        match *self {
            MissingnessMechanism::ProbitLinear { b, .. }
            | MissingnessMechanism::ProbitQuadratic { b, .. }
            | MissingnessMechanism::LogitLinear { b, .. } => b,
        }
    }

    pub fn with_slope(&self, b: f64) -> Self {
        match *self {
            MissingnessMechanism::ProbitLinear { a, .. } => {
                MissingnessMechanism::ProbitLinear { a, b }
            }
            MissingnessMechanism::ProbitQuadratic { a, c, .. } => {
                MissingnessMechanism::ProbitQuadratic { a, b, c }
            }
            MissingnessMechanism::LogitLinear { a, .. } => {
                MissingnessMechanism::LogitLinear { a, b }
            }
        }
    }

    /// Numerical audit that `P(observed | y)` is non-decreasing over
    /// `[lo, hi]` (513-point grid).
    pub fn is_monotone_over(&self, lo: f64, hi: f64) -> bool {
        let n = 513;
        let mut prev = self.p_observe(lo);
        for i in 1..n {
            let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let p = self.p_observe(y);
            if p < prev - 1e-12 {
                return false;
            }
            prev = p;
        }
        true
    }
}

/// Curvature for the quadratic mechanism: the largest `c > 0` (steeper
/// observation curve above the center) that keeps the linear predictor
/// monotone over the sign-symmetric range `[-(center + 6*sd), center + 6*sd]`.
/// For all-positive intensity supports the monotonicity constraint on the
/// data range alone would never bind, so the symmetric range supplies the
/// bound.
pub fn quadratic_curvature(b: f64, center: f64, sd: f64) -> f64 {
    let reach = (center.abs() + 6.0 * sd).max(1e-12);
    b / (2.0 * reach)
}

/// Logistic slope comparable to a probit slope (`1.70 * b`).
pub fn logit_slope_matching_probit(b_probit: f64) -> f64 {
    LOGIT_PROBIT_SCALE * b_probit
}

/// Simulation design: proteins, peptide-count support, generating
/// hyperparameters, mechanism, replicate count, and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_proteins: usize,
    pub peptide_counts_support: Vec<usize>,
    pub theta0: ModelParams,
    pub mechanism: MissingnessMechanism,
    pub n_replicates: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// The benchmark design: 500 proteins, peptide counts uniform on
    /// 1..=12, theta0 = (a=-9, b=0.5, tau=9, xi=4, sigma=0.3,
    /// beta_alpha=18.5, beta_mu=0), probit-linear mechanism, 100
    /// replicates.
    pub fn benchmark(seed: u64) -> Self {
        SimulationConfig {
            n_proteins: 500,
            peptide_counts_support: (1..=12).collect(),
            theta0: ModelParams {
                a: -9.0,
                b: 0.5,
                tau: 9.0,
                xi: 4.0,
                sigma: 0.3,
                beta_alpha: 18.5,
                beta_mu: 0.0,
            },
            mechanism: MissingnessMechanism::ProbitLinear { a: -9.0, b: 0.5 },
            n_replicates: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_proteins == 0 {
            return Err(Error::Parameter("n_proteins must be >= 1".into()));
        }
        if self.peptide_counts_support.is_empty()
            || self.peptide_counts_support.iter().any(|&m| m == 0)
        {
            return Err(Error::Parameter(
                "peptide count support must be non-empty positive integers".into(),
            ));
        }
        self.theta0.validate()
    }
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// Generate a fully observed dataset from the latent model, returning the
/// true per-protein fold changes alongside.
pub fn generate_complete<R: Rng + ?Sized>(
    cfg: &SimulationConfig,
    rng: &mut R,
) -> (Dataset, Vec<(String, f64)>) {
    let t = &cfg.theta0;
    let w = id_width(cfg.n_proteins);
    let mut pairs = Vec::new();
    let mut truth = Vec::with_capacity(cfg.n_proteins);
    for i in 0..cfg.n_proteins {
        let protein_id = format!("P{i:0w$}");
        let z: f64 = StandardNormal.sample(rng);
        let mu = t.beta_mu + t.tau.sqrt() * z;
        let m = cfg.peptide_counts_support[rng.random_range(0..cfg.peptide_counts_support.len())];
        for j in 0..m {
            let z: f64 = StandardNormal.sample(rng);
            let alpha = t.beta_alpha + t.xi.sqrt() * z;
            let mut slot = |sample: Sample| {
                let eps: f64 = StandardNormal.sample(rng);
                alpha + sample.sign() * mu / 2.0 + t.sigma.sqrt() * eps
            };
            let y_a = slot(Sample::A);
            let y_b = slot(Sample::B);
            pairs.push(PeptidePair {
                protein_id: protein_id.clone(),
                peptide_id: format!("{protein_id}_p{j:02}"),
                y_a: Some(y_a),
                y_b: Some(y_b),
            });
        }
        truth.push((protein_id, mu));
    }
    let ds = Dataset::from_pairs(pairs, "simulated".into()).expect("generated keys are unique");
    (ds, truth)
}

/// Generate a dataset with missingness from the configured mechanism.
pub fn generate_dataset<R: Rng + ?Sized>(
    cfg: &SimulationConfig,
    rng: &mut R,
) -> (Dataset, Vec<(String, f64)>) {
    let (complete, truth) = generate_complete(cfg, rng);
    let ds = inject_missingness(&complete, &cfg.mechanism, rng);
    (ds, truth)
}

/// Independently blank each observed intensity with probability
/// `1 - P(observed | y)`; categories are recomputed.
pub fn inject_missingness<R: Rng + ?Sized>(
    ds: &Dataset,
    mech: &MissingnessMechanism,
    rng: &mut R,
) -> Dataset {
    let mut pairs = Vec::new();
    for g in &ds.proteins {
        for p in &g.peptides {
            let mut blank = |v: Option<f64>| -> Option<f64> {
                let y = v?;
                if rng.random::<f64>() < mech.p_observe(y) {
                    Some(y)
                } else {
                    None
                }
            };
            pairs.push(PeptidePair {
                protein_id: p.protein_id.clone(),
                peptide_id: p.peptide_id.clone(),
                y_a: blank(p.y_a),
                y_b: blank(p.y_b),
            });
        }
    }
    let provenance = format!("{};inject={}", ds.provenance, mech.family_name());
    Dataset::from_pairs(pairs, provenance).expect("keys preserved from valid dataset")
}

/// Expected missing fraction of a mechanism over a reference set of
/// intensities: `mean(1 - P(observed | y))`.
pub fn expected_missing_rate(mech: &MissingnessMechanism, intensities: &[f64]) -> f64 {
    let s: f64 = intensities.iter().map(|&y| 1.0 - mech.p_observe(y)).sum();
    s / intensities.len() as f64
}

/// Which free scalar the calibration tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationKnob {
    Intercept,
    Slope,
}

/// Calibrate one scalar of the mechanism by bisection on `[-50, 50]` so
/// the expected missing fraction over `intensities` hits `target` within
/// `tolerance` (default 0.005 when `None`). The expected rate is monotone
/// in the intercept always, and in the slope for positive supports; the
/// bisection runs to interval width 1e-9 (always fewer than 200 steps).
pub fn calibrate_mechanism(
    base: &MissingnessMechanism,
    intensities: &[f64],
    target: f64,
    tolerance: Option<f64>,
    knob: CalibrationKnob,
) -> Result<MissingnessMechanism> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Parameter(format!(
            "target missing rate must be in (0,1), got {target}"
        )));
    }
    if intensities.is_empty() {
        return Err(Error::Parameter(
            "calibration needs reference intensities".into(),
        ));
    }
    let tolerance = tolerance.unwrap_or(0.005);
    let apply = |v: f64| -> MissingnessMechanism {
        match knob {
            CalibrationKnob::Intercept => base.with_intercept(v),
            CalibrationKnob::Slope => base.with_slope(v),
        }
    };
    let rate = |v: f64| expected_missing_rate(&apply(v), intensities);

    // rate is non-increasing in the knob (larger intercept/slope observes
    // more); bracket and bisect
    let (mut lo, mut hi) = (-50.0, 50.0);
    let (rate_lo, rate_hi) = (rate(lo), rate(hi));
    let (max_rate, min_rate) = (rate_lo.max(rate_hi), rate_lo.min(rate_hi));
    if target > max_rate || target < min_rate {
        return Err(Error::Calibration {
            target,
            lo: min_rate,
            hi: max_rate,
        });
    }
    let descending = rate_lo >= rate_hi;
    for _ in 0..200 {
        if hi - lo < 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = rate(mid);
        let go_right = if descending { r > target } else { r < target };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = 0.5 * (lo + hi);
    let achieved = rate(v);
    if (achieved - target).abs() > tolerance {
        return Err(Error::Calibration {
            target,
            lo: min_rate,
            hi: max_rate,
        });
    }
    Ok(apply(v))
}
