//! Scoring and study drivers: MSE/correlation by protein category and
//! missingness bin, the six-method simulation comparison, the sensitivity
//! analysis on complete-case data, and the mechanism-misspecification
//! study.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{anova_estimate, knnq, median_ratio, qrollup};
use crate::data::{complete_case_reduce, drop_missing_proteins, Dataset, Method, ProteinCategory};
use crate::error::Error;
use crate::gibbs::{run_chain, ChainConfig, ChainOutput, Model};
use crate::io::EstimateRow;
use crate::rng::{derive_seed, indexed_substream, substream};
use crate::simgen::{
    calibrate_mechanism, expected_missing_rate, generate_complete, generate_dataset,
    inject_missingness, logit_slope_matching_probit, quadratic_curvature, CalibrationKnob,
    MissingnessMechanism, SimulationConfig,
};
use crate::Result;

/// Scoring stratum: one protein category or everything at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreCategory {
    Matched,
    Unmatched,
    OneSided,
    All,
}

impl ScoreCategory {
    pub const CATEGORIES: [ScoreCategory; 3] = [
        ScoreCategory::Matched,
        ScoreCategory::Unmatched,
        ScoreCategory::OneSided,
    ];

    fn matches(self, c: ProteinCategory) -> bool {
        match self {
            ScoreCategory::All => true,
            ScoreCategory::Matched => c == ProteinCategory::Matched,
            ScoreCategory::Unmatched => c == ProteinCategory::Unmatched,
            ScoreCategory::OneSided => c == ProteinCategory::OneSided,
        }
    }
}

impl fmt::Display for ScoreCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScoreCategory::Matched => "Matched",
            ScoreCategory::Unmatched => "Unmatched",
            ScoreCategory::OneSided => "OneSided",
            ScoreCategory::All => "All",
        };
        f.write_str(s)
    }
}

impl FromStr for ScoreCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Matched" => Ok(ScoreCategory::Matched),
            "Unmatched" => Ok(ScoreCategory::Unmatched),
            "OneSided" => Ok(ScoreCategory::OneSided),
            "All" => Ok(ScoreCategory::All),
            other => Err(Error::Parameter(format!("unknown score category `{other}`"))),
        }
    }
}

/// Quartile bins of the percent of a protein's intensity slots that are
/// missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissingBin {
    UpTo25,
    UpTo50,
    UpTo75,
    UpTo100,
}

impl MissingBin {
    pub const ALL: [MissingBin; 4] = [
        MissingBin::UpTo25,
        MissingBin::UpTo50,
        MissingBin::UpTo75,
        MissingBin::UpTo100,
    ];

    pub fn of_fraction(missing_fraction: f64) -> MissingBin {
        let pct = missing_fraction * 100.0;
        if pct < 25.0 {
            MissingBin::UpTo25
        } else if pct < 50.0 {
            MissingBin::UpTo50
        } else if pct < 75.0 {
            MissingBin::UpTo75
        } else {
            MissingBin::UpTo100
        }
    }
}

impl fmt::Display for MissingBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MissingBin::UpTo25 => "[0,25)",
            MissingBin::UpTo50 => "[25,50)",
            MissingBin::UpTo75 => "[50,75)",
            MissingBin::UpTo100 => "[75,100]",
        };
        f.write_str(s)
    }
}

impl FromStr for MissingBin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "[0,25)" => Ok(MissingBin::UpTo25),
            "[25,50)" => Ok(MissingBin::UpTo50),
            "[50,75)" => Ok(MissingBin::UpTo75),
            "[75,100]" => Ok(MissingBin::UpTo100),
            other => Err(Error::Parameter(format!("unknown missing bin `{other}`"))),
        }
    }
}

/// One row of the tidy score table.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub replicate: usize,
    pub method: Method,
    pub category: ScoreCategory,
    pub missing_bin: Option<MissingBin>,
    /// Injected missingness level (fraction), for sensitivity runs.
    pub level: Option<f64>,
    /// Generating mechanism family, for misspecification runs.
    pub mechanism: Option<String>,
    pub mse: f64,
    pub correlation: Option<f64>,
    pub n_proteins: usize,
}

/// Pearson correlation; `None` when fewer than two points or a degenerate
/// variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Score one replicate: per (method, category) MSE and correlation against
/// the truth, plus a per-missingness-bin breakdown across all categories.
/// Only proteins where the method applies (by original category) and a
/// truth value exists contribute. Strata with zero proteins are omitted.
pub fn score_replicate(
    replicate: usize,
    estimates: &[(Method, Vec<(String, f64)>)],
    truth: &HashMap<String, f64>,
    ds: &Dataset,
) -> Vec<MethodScore> {
    let info: HashMap<&str, (ProteinCategory, MissingBin)> = ds
        .proteins
        .iter()
        .map(|g| {
            (
                g.protein_id.as_str(),
                (g.category, MissingBin::of_fraction(g.missing_fraction())),
            )
        })
        .collect();

    let mut rows = Vec::new();
    for (method, ests) in estimates {
        // errors joined to category/bin, already filtered to applicability
        let mut joined: Vec<(ProteinCategory, MissingBin, f64, f64)> = Vec::new();
        for (id, est) in ests {
            let Some(&(category, bin)) = info.get(id.as_str()) else {
                continue;
            };
            if !method.applies_to(category) {
                continue;
            }
            let Some(&t) = truth.get(id) else {
                continue;
            };
            joined.push((category, bin, *est, t));
        }

        let mut push_stratum =
            |category: ScoreCategory, bin: Option<MissingBin>, items: &[(f64, f64)]| {
                if items.is_empty() {
                    return;
                }
                let mse = items
                    .iter()
                    .map(|(e, t)| (e - t) * (e - t))
                    .sum::<f64>()
                    / items.len() as f64;
                let ests: Vec<f64> = items.iter().map(|(e, _)| *e).collect();
                let ts: Vec<f64> = items.iter().map(|(_, t)| *t).collect();
                rows.push(MethodScore {
                    replicate,
                    method: *method,
                    category,
                    missing_bin: bin,
                    level: None,
                    mechanism: None,
                    mse,
                    correlation: pearson(&ests, &ts),
                    n_proteins: items.len(),
                });
            };

        for category in ScoreCategory::CATEGORIES {
            let items: Vec<(f64, f64)> = joined
                .iter()
                .filter(|(c, _, _, _)| category.matches(*c))
                .map(|(_, _, e, t)| (*e, *t))
                .collect();
            push_stratum(category, None, &items);
        }
        let all: Vec<(f64, f64)> = joined.iter().map(|(_, _, e, t)| (*e, *t)).collect();
        push_stratum(ScoreCategory::All, None, &all);
        for bin in MissingBin::ALL {
            let items: Vec<(f64, f64)> = joined
                .iter()
                .filter(|(_, b, _, _)| *b == bin)
                .map(|(_, _, e, t)| (*e, *t))
                .collect();
            push_stratum(ScoreCategory::All, Some(bin), &items);
        }
    }
    rows
}

/// All fitted estimates for one dataset, plus the chains behind the
/// Bayesian ones and any per-method failures.
pub struct MethodFits {
    pub estimates: Vec<(Method, Vec<EstimateRow>)>,
    pub m5_chain: Option<ChainOutput>,
    pub m3_chain: Option<ChainOutput>,
    pub failures: Vec<(Method, String)>,
}

impl MethodFits {
    /// `(protein_id, estimate)` pairs per method, for scoring.
    pub fn point_estimates(&self) -> Vec<(Method, Vec<(String, f64)>)> {
        self.estimates
            .iter()
            .map(|(m, rows)| {
                (
                    *m,
                    rows.iter()
                        .map(|r| (r.protein_id.clone(), r.estimate))
                        .collect(),
                )
            })
            .collect()
    }
}

/// Fit the selected methods on one dataset. Chain seeds are derived from
/// `chain_cfg.seed` per model so M5 and M3 run on independent streams.
/// A method failure is recorded, not fatal.
pub fn fit_methods(
    ds: &Dataset,
    methods: &[Method],
    chain_cfg: &ChainConfig,
    knn_k: usize,
) -> MethodFits {
    let shape: HashMap<&str, (usize, usize)> = ds
        .proteins
        .iter()
        .map(|g| {
            (
                g.protein_id.as_str(),
                (g.n_peptides(), g.n_matched_pairs()),
            )
        })
        .collect();
    let row = |id: &str, category: ProteinCategory, method: Method, est: f64| {
        let (np, nm) = shape[id];
        EstimateRow {
            protein_id: id.to_string(),
            category,
            method,
            estimate: est,
            posterior_sd: None,
            ci_lower: None,
            ci_upper: None,
            n_peptides: np,
            n_matched_pairs: nm,
        }
    };

    let mut fits = MethodFits {
        estimates: Vec::new(),
        m5_chain: None,
        m3_chain: None,
        failures: Vec::new(),
    };

    for &method in methods {
        match method {
            Method::M5 | Method::M3 => {
                let model = if method == Method::M5 { Model::M5 } else { Model::M3 };
                let label = if method == Method::M5 { "m5" } else { "m3" };
                let cfg = ChainConfig {
                    model,
                    seed: derive_seed(chain_cfg.seed, label, 0),
                    ..*chain_cfg
                };
                match run_chain(ds, &cfg) {
                    Ok(out) => {
                        let rows = out
                            .summaries
                            .iter()
                            .map(|s| {
                                let (np, nm) = shape[s.protein_id.as_str()];
                                EstimateRow::from_summary(s, method, np, nm)
                            })
                            .collect();
                        fits.estimates.push((method, rows));
                        if method == Method::M5 {
                            fits.m5_chain = Some(out);
                        } else {
                            fits.m3_chain = Some(out);
                        }
                    }
                    Err(e) => fits.failures.push((method, e.to_string())),
                }
            }
            Method::Med => {
                let rows = ds
                    .proteins
                    .iter()
                    .filter_map(|g| {
                        median_ratio(g)
                            .estimate
                            .map(|e| row(&g.protein_id, g.category, method, e))
                    })
                    .collect();
                fits.estimates.push((method, rows));
            }
            Method::Anova => {
                let rows = ds
                    .proteins
                    .iter()
                    .filter_map(|g| {
                        anova_estimate(g)
                            .estimate
                            .map(|e| row(&g.protein_id, g.category, method, e))
                    })
                    .collect();
                fits.estimates.push((method, rows));
            }
            Method::Q => {
                let rows = ds
                    .proteins
                    .iter()
                    .filter_map(|g| {
                        qrollup(g)
                            .estimate
                            .map(|e| row(&g.protein_id, g.category, method, e))
                    })
                    .collect();
                fits.estimates.push((method, rows));
            }
            Method::Knnq => {
                let ests = knnq(ds, knn_k);
                let rows = ests
                    .iter()
                    .zip(&ds.proteins)
                    .filter_map(|(est, g)| {
                        est.estimate
                            .map(|e| row(&g.protein_id, g.category, method, e))
                    })
                    .collect();
                fits.estimates.push((method, rows));
            }
        }
    }
    fits
}

/// The six-method simulation comparison: generate `n_replicates` datasets
/// from the config, fit every method, and score each replicate against the
/// generating fold changes. Deterministic given the config seed;
/// replicates run in parallel.
pub fn run_simulation_study(
    cfg: &SimulationConfig,
    methods: &[Method],
    chain_cfg: &ChainConfig,
    knn_k: usize,
) -> Result<Vec<MethodScore>> {
    cfg.validate()?;
    chain_cfg.validate()?;
    let replicate_rows: Vec<Vec<MethodScore>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut gen_rng = indexed_substream(cfg.seed, "replicate-gen", r as u64);
            let (ds_full, truth) = generate_dataset(cfg, &mut gen_rng);
            let (ds, n_dropped) = drop_missing_proteins(&ds_full);
            if n_dropped > 0 {
                log::debug!("replicate {r}: dropped {n_dropped} fully-missing proteins");
            }
            let rep_chain_cfg = ChainConfig {
                seed: derive_seed(chain_cfg.seed, "replicate-chain", r as u64),
                ..*chain_cfg
            };
            let fits = fit_methods(&ds, methods, &rep_chain_cfg, knn_k);
            for (m, why) in &fits.failures {
                log::warn!("replicate {r}: {m} failed: {why}");
            }
            let truth_map: HashMap<String, f64> = truth.into_iter().collect();
            score_replicate(r, &fits.point_estimates(), &truth_map, &ds)
        })
        .collect();
    Ok(replicate_rows.into_iter().flatten().collect())
}

/// Calibration record for one injected level or mechanism.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub label: String,
    pub mechanism: MissingnessMechanism,
    pub target_missing_rate: f64,
    pub expected_missing_rate: f64,
    pub realized_missing_fraction: f64,
}

/// Sensitivity-run metadata for the JSON sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityMeta {
    pub seed: u64,
    pub n_sampled_proteins: usize,
    pub selected_proteins: Vec<String>,
    pub tuned: CalibrationKnob,
    pub calibrations: Vec<CalibrationRecord>,
}

/// Sensitivity analysis: reduce to complete cases, sample
/// `sample_size` proteins (seeded), take each protein's mean pair
/// difference as the reference, then inject calibrated missingness at each
/// level and score all methods against the reference.
#[allow(clippy::too_many_arguments)]
pub fn run_sensitivity(
    ds: &Dataset,
    levels: &[f64],
    methods: &[Method],
    chain_cfg: &ChainConfig,
    knn_k: usize,
    sample_size: usize,
    tune_slope: bool,
    seed: u64,
) -> Result<(Vec<MethodScore>, SensitivityMeta)> {
    chain_cfg.validate()?;
    let cc = complete_case_reduce(ds);
    if cc.proteins.is_empty() {
        return Err(Error::EmptyInput);
    }

    // seeded subsample in canonical id order
    let mut sorted = cc.proteins.clone();
    sorted.sort_by(|a, b| a.protein_id.cmp(&b.protein_id));
    let n_take = sample_size.min(sorted.len());
    if n_take < sample_size {
        log::warn!(
            "sensitivity: only {} complete-case proteins available (requested {sample_size})",
            sorted.len()
        );
    }
    let mut pick_rng = substream(seed, "subsample");
    let mut picked_idx = sample_indices(&mut pick_rng, sorted.len(), n_take).into_vec();
    picked_idx.sort_unstable();
    let sampled = Dataset {
        proteins: picked_idx.iter().map(|&i| sorted[i].clone()).collect(),
        provenance: format!("{};subsample={n_take}", cc.provenance),
    };

    let reference: HashMap<String, f64> = sampled
        .proteins
        .iter()
        .map(|g| {
            let diffs: Vec<f64> = g
                .peptides
                .iter()
                .map(|p| p.y_a.unwrap() - p.y_b.unwrap())
                .collect();
            (
                g.protein_id.clone(),
                diffs.iter().sum::<f64>() / diffs.len() as f64,
            )
        })
        .collect();

    let intensities = sampled.observed_intensities();
    let knob = if tune_slope {
        CalibrationKnob::Slope
    } else {
        CalibrationKnob::Intercept
    };
    let base = MissingnessMechanism::ProbitLinear { a: -9.0, b: 0.5 };

    let mut rows = Vec::new();
    let mut calibrations = Vec::new();
    for (li, &level) in levels.iter().enumerate() {
        let injected = if level == 0.0 {
            sampled.clone()
        } else {
            let mech = calibrate_mechanism(&base, &intensities, level, None, knob)?;
            let lo = intensities.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = intensities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !mech.is_monotone_over(lo, hi) {
                return Err(Error::Parameter(format!(
                    "calibrated mechanism at level {level} is not monotone over the data range"
                )));
            }
            let mut inject_rng = indexed_substream(seed, "inject", li as u64);
            let injected = inject_missingness(&sampled, &mech, &mut inject_rng);
            calibrations.push(CalibrationRecord {
                label: format!("level={level}"),
                mechanism: mech,
                target_missing_rate: level,
                expected_missing_rate: expected_missing_rate(&mech, &intensities),
                realized_missing_fraction: injected.n_missing_slots() as f64
                    / injected.n_slots() as f64,
            });
            injected
        };
        let (fit_ds, _) = drop_missing_proteins(&injected);
        let level_chain_cfg = ChainConfig {
            seed: derive_seed(chain_cfg.seed, "level-chain", li as u64),
            ..*chain_cfg
        };
        let fits = fit_methods(&fit_ds, methods, &level_chain_cfg, knn_k);
        for (m, why) in &fits.failures {
            log::warn!("level {level}: {m} failed: {why}");
        }
        let mut level_rows = score_replicate(li, &fits.point_estimates(), &reference, &fit_ds);
        for r in &mut level_rows {
            r.level = Some(level);
        }
        rows.extend(level_rows);
    }

    let meta = SensitivityMeta {
        seed,
        n_sampled_proteins: n_take,
        selected_proteins: sampled
            .proteins
            .iter()
            .map(|g| g.protein_id.clone())
            .collect(),
        tuned: knob,
        calibrations,
    };
    Ok((rows, meta))
}

/// Misspecification-run metadata for the JSON sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MisspecMeta {
    pub seed: u64,
    pub target_missing_rate: f64,
    pub calibrations: Vec<CalibrationRecord>,
}

/// Build the three mechanism families (probit-linear, probit-quadratic,
/// logit-linear), each calibrated to the target rate against intensities
/// implied by the generating model.
pub fn calibrated_mechanism_families(
    cfg: &SimulationConfig,
    target: f64,
) -> Result<Vec<MissingnessMechanism>> {
    let mut rng = substream(cfg.seed, "mechanism-calibration");
    let calib_cfg = SimulationConfig {
        n_proteins: 20_000 / 7, // ~20k intensity slots
        ..cfg.clone()
    };
    let (reference, _) = generate_complete(&calib_cfg, &mut rng);
    let ys = reference.observed_intensities();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();

    let b = cfg.theta0.b;
    let families = [
        MissingnessMechanism::ProbitLinear { a: 0.0, b },
        MissingnessMechanism::ProbitQuadratic {
            a: 0.0,
            b,
            c: quadratic_curvature(b, mean, sd),
        },
        MissingnessMechanism::LogitLinear {
            a: 0.0,
            b: logit_slope_matching_probit(b),
        },
    ];
    families
        .iter()
        .map(|f| {
            let mech = calibrate_mechanism(f, &ys, target, None, CalibrationKnob::Intercept)?;
            if !mech.is_monotone_over(mean - 6.0 * sd, mean + 6.0 * sd) {
                return Err(Error::Parameter(format!(
                    "{} mechanism is not monotone over the intensity range",
                    mech.family_name()
                )));
            }
            Ok(mech)
        })
        .collect()
}

/// Misspecification study: per replicate, one complete latent dataset gets
/// three missingness overlays (one per mechanism family); M5 with its
/// probit-linear working model is fit to each overlay and scored against
/// the generating truth.
pub fn run_misspec_study(
    cfg: &SimulationConfig,
    chain_cfg: &ChainConfig,
    target: f64,
) -> Result<(Vec<MethodScore>, MisspecMeta)> {
    cfg.validate()?;
    chain_cfg.validate()?;
    let mechanisms = calibrated_mechanism_families(cfg, target)?;

    let replicate_rows: Vec<Result<(Vec<MethodScore>, Vec<(usize, f64)>)>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut gen_rng = indexed_substream(cfg.seed, "misspec-gen", r as u64);
            let (complete, truth) = generate_complete(cfg, &mut gen_rng);
            let truth_map: HashMap<String, f64> = truth.into_iter().collect();
            let mut rows = Vec::new();
            let mut realized = Vec::new();
            for (mi, mech) in mechanisms.iter().enumerate() {
                let mut inject_rng =
                    indexed_substream(cfg.seed, "misspec-inject", (r * mechanisms.len() + mi) as u64);
                let injected = inject_missingness(&complete, mech, &mut inject_rng);
                realized.push((
                    mi,
                    injected.n_missing_slots() as f64 / injected.n_slots() as f64,
                ));
                let (ds, _) = drop_missing_proteins(&injected);
                let cfg_m5 = ChainConfig {
                    model: Model::M5,
                    seed: derive_seed(
                        chain_cfg.seed,
                        "misspec-chain",
                        (r * mechanisms.len() + mi) as u64,
                    ),
                    ..*chain_cfg
                };
                let out = run_chain(&ds, &cfg_m5)?;
                let ests = vec![(
                    Method::M5,
                    out.summaries
                        .iter()
                        .map(|s| (s.protein_id.clone(), s.post_mean))
                        .collect::<Vec<_>>(),
                )];
                let mut mech_rows = score_replicate(r, &ests, &truth_map, &ds);
                for row in &mut mech_rows {
                    row.mechanism = Some(mech.family_name().to_string());
                }
                rows.extend(mech_rows);
            }
            Ok((rows, realized))
        })
        .collect();

    let mut rows = Vec::new();
    let mut realized_sums: HashMap<usize, (f64, usize)> = HashMap::new();
    for rep in replicate_rows {
        let (rep_rows, realized) = rep?;
        rows.extend(rep_rows);
        for (mi, frac) in realized {
            let e = realized_sums.entry(mi).or_insert((0.0, 0));
            e.0 += frac;
            e.1 += 1;
        }
    }

    let mut calib_rng = substream(cfg.seed, "mechanism-calibration");
    let calib_cfg = SimulationConfig {
        n_proteins: 20_000 / 7,
        ..cfg.clone()
    };
    let (reference, _) = generate_complete(&calib_cfg, &mut calib_rng);
    let ys = reference.observed_intensities();
    let calibrations = mechanisms
        .iter()
        .enumerate()
        .map(|(mi, mech)| {
            let (sum, n) = realized_sums[&mi];
            CalibrationRecord {
                label: mech.family_name().to_string(),
                mechanism: *mech,
                target_missing_rate: target,
                expected_missing_rate: expected_missing_rate(mech, &ys),
                realized_missing_fraction: sum / n as f64,
            }
        })
        .collect();

    Ok((
        rows,
        MisspecMeta {
            seed: cfg.seed,
            target_missing_rate: target,
            calibrations,
        },
    ))
}

/// Aggregate of one (method, category, bin, level, mechanism) cell across
/// replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreAggregate {
    pub method: Method,
    pub category: ScoreCategory,
    pub missing_bin: Option<MissingBin>,
    pub level: Option<f64>,
    pub mechanism: Option<String>,
    /// Mean of the per-replicate MSEs.
    pub mean_mse: f64,
    /// Protein-count-weighted (pooled) MSE.
    pub pooled_mse: f64,
    pub mean_correlation: Option<f64>,
    pub n_replicates: usize,
    pub total_proteins: usize,
}

/// Collapse score rows across replicates. Both aggregations are reported
/// because a mean of per-replicate MSEs and a pooled MSE differ when
/// replicate sizes vary; comparisons use the per-replicate mean.
pub fn summarize_scores(rows: &[MethodScore]) -> Vec<ScoreAggregate> {
    type Key = (Method, ScoreCategory, Option<MissingBin>, Option<u64>, Option<String>);
    let mut groups: HashMap<Key, Vec<&MethodScore>> = HashMap::new();
    for r in rows {
        let key = (
            r.method,
            r.category,
            r.missing_bin,
            r.level.map(f64::to_bits),
            r.mechanism.clone(),
        );
        groups.entry(key).or_default().push(r);
    }
    let mut out: Vec<ScoreAggregate> = groups
        .into_iter()
        .map(|((method, category, bin, level_bits, mechanism), rs)| {
            let n_rep = rs.len();
            let mean_mse = rs.iter().map(|r| r.mse).sum::<f64>() / n_rep as f64;
            let total: usize = rs.iter().map(|r| r.n_proteins).sum();
            let pooled_mse = rs
                .iter()
                .map(|r| r.mse * r.n_proteins as f64)
                .sum::<f64>()
                / total as f64;
            let corrs: Vec<f64> = rs.iter().filter_map(|r| r.correlation).collect();
            let mean_correlation = if corrs.is_empty() {
                None
            } else {
                Some(corrs.iter().sum::<f64>() / corrs.len() as f64)
            };
            ScoreAggregate {
                method,
                category,
                missing_bin: bin,
                level: level_bits.map(f64::from_bits),
                mechanism,
                mean_mse,
                pooled_mse,
                mean_correlation,
                n_replicates: n_rep,
                total_proteins: total,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.method, format!("{}", a.category), a.missing_bin.map(|b| b as u8), a.level.map(f64::to_bits), a.mechanism.clone())
            .cmp(&(b.method, format!("{}", b.category), b.missing_bin.map(|b| b as u8), b.level.map(f64::to_bits), b.mechanism.clone()))
    });
    out
}

/// Pull the mean MSE of one (method, category) cell, ignoring bin, level,
/// and mechanism strata.
pub fn mean_mse(rows: &[MethodScore], method: Method, category: ScoreCategory) -> Option<f64> {
    let mses: Vec<f64> = rows
        .iter()
        .filter(|r| {
            r.method == method
                && r.category == category
                && r.missing_bin.is_none()
        })
        .map(|r| r.mse)
        .collect();
    if mses.is_empty() {
        None
    } else {
        Some(mses.iter().sum::<f64>() / mses.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PeptidePair;
    use crate::data::ProteinGroup;

    fn toy_dataset() -> Dataset {
        let mk = |protein: &str, peptide: &str, a: Option<f64>, b: Option<f64>| PeptidePair {
            protein_id: protein.into(),
            peptide_id: peptide.into(),
            y_a: a,
            y_b: b,
        };
        Dataset {
            proteins: vec![
                ProteinGroup::new(
                    "P1".into(),
                    vec![
                        mk("P1", "p1", Some(10.0), Some(9.0)),
                        mk("P1", "p2", Some(11.0), Some(9.5)),
                    ],
                ),
                ProteinGroup::new(
                    "P2".into(),
                    vec![mk("P2", "p1", Some(12.0), None), mk("P2", "p2", None, Some(9.0))],
                ),
                ProteinGroup::new("P3".into(), vec![mk("P3", "p1", Some(14.0), None)]),
            ],
            provenance: "toy".into(),
        }
    }

    fn truth_map(entries: &[(&str, f64)]) -> HashMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn perfect_estimates_score_zero_mse_unit_correlation() {
        let ds = toy_dataset();
        let truth = truth_map(&[("P1", 1.25), ("P2", 3.0), ("P3", 5.0)]);
        let ests = vec![(
            Method::M5,
            vec![
                ("P1".to_string(), 1.25),
                ("P2".to_string(), 3.0),
                ("P3".to_string(), 5.0),
            ],
        )];
        let rows = score_replicate(0, &ests, &truth, &ds);
        let all = rows
            .iter()
            .find(|r| r.category == ScoreCategory::All && r.missing_bin.is_none())
            .unwrap();
        assert_eq!(all.mse, 0.0);
        assert_eq!(all.n_proteins, 3);
        assert!((all.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_bias_gives_unit_mse_and_unit_correlation() {
        // correlation is blind to additive bias; MSE is not
        let ds = toy_dataset();
        let truth = truth_map(&[("P1", 1.25), ("P2", 3.0), ("P3", 5.0)]);
        let ests = vec![(
            Method::M5,
            vec![
                ("P1".to_string(), 2.25),
                ("P2".to_string(), 4.0),
                ("P3".to_string(), 6.0),
            ],
        )];
        let rows = score_replicate(0, &ests, &truth, &ds);
        let all = rows
            .iter()
            .find(|r| r.category == ScoreCategory::All && r.missing_bin.is_none())
            .unwrap();
        assert!((all.mse - 1.0).abs() < 1e-12);
        assert!((all.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn applicability_is_enforced_per_category() {
        let ds = toy_dataset();
        let truth = truth_map(&[("P1", 1.0), ("P2", 3.0), ("P3", 5.0)]);
        // a MED estimate for an unmatched protein must be ignored
        let ests = vec![(
            Method::Med,
            vec![("P1".to_string(), 1.0), ("P2".to_string(), 99.0)],
        )];
        let rows = score_replicate(0, &ests, &truth, &ds);
        let all = rows
            .iter()
            .find(|r| r.category == ScoreCategory::All && r.missing_bin.is_none())
            .unwrap();
        assert_eq!(all.n_proteins, 1);
        assert_eq!(all.mse, 0.0);
        assert!(rows
            .iter()
            .all(|r| r.category != ScoreCategory::Unmatched));
    }

    #[test]
    fn missing_bins_partition_proteins() {
        let ds = toy_dataset();
        // P1: 0% missing -> [0,25); P2: 50% -> [50,75); P3: 50% -> [50,75)
        let truth = truth_map(&[("P1", 0.0), ("P2", 0.0), ("P3", 0.0)]);
        let ests = vec![(
            Method::M5,
            vec![
                ("P1".to_string(), 1.0),
                ("P2".to_string(), 2.0),
                ("P3".to_string(), 3.0),
            ],
        )];
        let rows = score_replicate(0, &ests, &truth, &ds);
        let bin_rows: Vec<&MethodScore> =
            rows.iter().filter(|r| r.missing_bin.is_some()).collect();
        let total: usize = bin_rows.iter().map(|r| r.n_proteins).sum();
        assert_eq!(total, 3);
        let b1 = bin_rows
            .iter()
            .find(|r| r.missing_bin == Some(MissingBin::UpTo25))
            .unwrap();
        assert_eq!(b1.n_proteins, 1);
        assert!((b1.mse - 1.0).abs() < 1e-12);
        let b3 = bin_rows
            .iter()
            .find(|r| r.missing_bin == Some(MissingBin::UpTo75))
            .unwrap();
        assert_eq!(b3.n_proteins, 2);
        assert!((b3.mse - (4.0 + 9.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn scores_invariant_to_protein_and_method_order() {
        let ds = toy_dataset();
        let mut reversed = ds.clone();
        reversed.proteins.reverse();
        let truth = truth_map(&[("P1", 1.0), ("P2", 3.0), ("P3", 5.0)]);
        let ests = vec![
            (
                Method::M5,
                vec![
                    ("P1".to_string(), 1.1),
                    ("P2".to_string(), 2.5),
                    ("P3".to_string(), 5.5),
                ],
            ),
            (Method::Med, vec![("P1".to_string(), 1.2)]),
        ];
        let mut ests_swapped = ests.clone();
        ests_swapped.swap(0, 1);

        let a = score_replicate(0, &ests, &truth, &ds);
        let b = score_replicate(0, &ests_swapped, &truth, &reversed);
        for row in &a {
            let found = b.iter().find(|r| {
                r.method == row.method
                    && r.category == row.category
                    && r.missing_bin == row.missing_bin
            });
            let found = found.expect("row present under reordering");
            assert_eq!(found.mse, row.mse);
            assert_eq!(found.n_proteins, row.n_proteins);
        }
    }

    #[test]
    fn pearson_degenerate_cases() {
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]), None);
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_and_pooled_mse_aggregation() {
        let mk = |replicate: usize, mse: f64, n: usize| MethodScore {
            replicate,
            method: Method::Med,
            category: ScoreCategory::Matched,
            missing_bin: None,
            level: None,
            mechanism: None,
            mse,
            correlation: None,
            n_proteins: n,
        };
        let rows = vec![mk(0, 1.0, 10), mk(1, 3.0, 30)];
        let agg = summarize_scores(&rows);
        assert_eq!(agg.len(), 1);
        assert!((agg[0].mean_mse - 2.0).abs() < 1e-12);
        assert!((agg[0].pooled_mse - (1.0 * 10.0 + 3.0 * 30.0) / 40.0).abs() < 1e-12);
        assert_eq!(agg[0].n_replicates, 2);

        assert_eq!(
            mean_mse(&rows, Method::Med, ScoreCategory::Matched),
            Some(2.0)
        );
        assert_eq!(mean_mse(&rows, Method::Q, ScoreCategory::Matched), None);
    }
}
