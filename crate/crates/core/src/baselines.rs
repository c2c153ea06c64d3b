//! Reference estimators: median log ratio (MED), one-way ANOVA mean
//! difference (ANOVA), QRollup (Q), and QRollup after weighted
//! k-nearest-neighbor imputation (KNNQ).
//!
//! Each estimator returns an absent estimate when it does not apply to the
//! protein's observation pattern: MED needs a matched pair, ANOVA and Q
//! need at least one observation per sample, KNNQ covers everything except
//! fully missing proteins. Pairs missing in both samples carry no
//! information for these estimators and are ignored (KNN imputes them from
//! the protein's observed mean when one exists).

use crate::data::{Dataset, Method, PeptidePair, ProteinGroup, Sample};

/// Fraction of top intensities QRollup keeps per protein/sample.
pub const QROLLUP_FRACTION: f64 = 0.66;
/// Default neighborhood size for KNN imputation.
pub const DEFAULT_KNN_K: usize = 10;
/// Inverse-distance weights are capped at this value (a zero-distance
/// neighbor counts as distance 1e-6).
const MAX_WEIGHT: f64 = 1e6;

/// A point estimate of one protein's log fold change; `None` when the
/// method does not apply to the protein's category.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub protein_id: String,
    pub method: Method,
    pub estimate: Option<f64>,
}

/// Median of the matched-pair log differences. Even counts average the two
/// central values.
pub fn median_ratio(protein: &ProteinGroup) -> PointEstimate {
    let mut diffs: Vec<f64> = protein
        .peptides
        .iter()
        .filter_map(|p| Some(p.y_a? - p.y_b?))
        .collect();
    let estimate = if diffs.is_empty() {
        None
    } else {
        diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = diffs.len();
        Some(if n % 2 == 1 {
            diffs[n / 2]
        } else {
            (diffs[n / 2 - 1] + diffs[n / 2]) / 2.0
        })
    };
    PointEstimate {
        protein_id: protein.protein_id.clone(),
        method: Method::Med,
        estimate,
    }
}

/// Mean observed intensity in sample A minus mean observed intensity in
/// sample B, pairing ignored.
pub fn anova_estimate(protein: &ProteinGroup) -> PointEstimate {
    let mean = |sample: Sample| -> Option<f64> {
        let vals: Vec<f64> = protein.observed_values(sample).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let estimate = match (mean(Sample::A), mean(Sample::B)) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    PointEstimate {
        protein_id: protein.protein_id.clone(),
        method: Method::Anova,
        estimate,
    }
}

/// QRollup: within each sample keep the largest `ceil(0.66 * n_obs)`
/// observed intensities (at least one), average them, and difference the
/// sample averages.
pub fn qrollup(protein: &ProteinGroup) -> PointEstimate {
    qrollup_with_fraction(protein, QROLLUP_FRACTION)
}

/// QRollup with an explicit top fraction (1.0 keeps everything and matches
/// the ANOVA estimate on complete data).
pub fn qrollup_with_fraction(protein: &ProteinGroup, fraction: f64) -> PointEstimate {
    let top_mean = |sample: Sample| -> Option<f64> {
        // deterministic tie-break: intensity descending, then peptide id
        let mut vals: Vec<(f64, &str)> = protein
            .peptides
            .iter()
            .filter_map(|p| Some((p.slot(sample)?, p.peptide_id.as_str())))
            .collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .unwrap()
                .then_with(|| x.1.cmp(y.1))
        });
        let keep = ((fraction * vals.len() as f64).ceil() as usize).max(1);
        let kept = &vals[..keep.min(vals.len())];
        Some(kept.iter().map(|(v, _)| v).sum::<f64>() / kept.len() as f64)
    };
    let estimate = match (top_mean(Sample::A), top_mean(Sample::B)) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    PointEstimate {
        protein_id: protein.protein_id.clone(),
        method: Method::Q,
        estimate,
    }
}

// Sorted neighbor index over peptides observed in both samples.
struct NeighborIndex {
    // (y_a, y_b) of every complete pair
    entries: Vec<(f64, f64)>,
    // entry indices sorted by coordinate (ties broken by protein/peptide id
    // at build time, so the order is independent of input ordering)
    by_a: Vec<usize>,
    by_b: Vec<usize>,
    by_mid: Vec<usize>,
}

impl NeighborIndex {
    fn build(ds: &Dataset) -> Self {
        let mut raw: Vec<(f64, f64, &str, &str)> = Vec::new();
        for g in &ds.proteins {
            for p in &g.peptides {
                if let (Some(a), Some(b)) = (p.y_a, p.y_b) {
                    raw.push((a, b, &g.protein_id, &p.peptide_id));
                }
            }
        }
        let sorted_by = |key: &dyn Fn(&(f64, f64, &str, &str)) -> f64| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..raw.len()).collect();
            idx.sort_by(|&i, &j| {
                key(&raw[i])
                    .partial_cmp(&key(&raw[j]))
                    .unwrap()
                    .then_with(|| raw[i].2.cmp(raw[j].2))
                    .then_with(|| raw[i].3.cmp(raw[j].3))
            });
            idx
        };
        let by_a = sorted_by(&|e| e.0);
        let by_b = sorted_by(&|e| e.1);
        let by_mid = sorted_by(&|e| (e.0 + e.1) / 2.0);
        NeighborIndex {
            entries: raw.iter().map(|e| (e.0, e.1)).collect(),
            by_a,
            by_b,
            by_mid,
        }
    }

    fn coord(&self, which: &[usize], pos: usize, key: impl Fn(&(f64, f64)) -> f64) -> f64 {
        key(&self.entries[which[pos]])
    }

    // k nearest entries to `query` along the given sorted view; ties
    // resolved toward the lower-valued side.
    fn k_nearest(
        &self,
        which: &[usize],
        key: impl Fn(&(f64, f64)) -> f64 + Copy,
        query: f64,
        k: usize,
    ) -> Vec<(f64, usize)> {
        let n = which.len();
        let mut out = Vec::with_capacity(k.min(n));
        if n == 0 {
            return out;
        }
        let split = which.partition_point(|&i| key(&self.entries[i]) < query);
        let mut left = split as isize - 1;
        let mut right = split;
        while out.len() < k && (left >= 0 || right < n) {
            let dl = if left >= 0 {
                (query - self.coord(which, left as usize, key)).abs()
            } else {
                f64::INFINITY
            };
            let dr = if right < n {
                (self.coord(which, right, key) - query).abs()
            } else {
                f64::INFINITY
            };
            if dl <= dr {
                out.push((dl, which[left as usize]));
                left -= 1;
            } else {
                out.push((dr, which[right]));
                right += 1;
            }
        }
        out
    }
}

fn weighted_mean(neighbors: &[(f64, usize)], value: impl Fn(usize) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(d, idx) in neighbors {
        let w = (1.0 / d.max(1.0 / MAX_WEIGHT)).min(MAX_WEIGHT);
        num += w * value(idx);
        den += w;
    }
    num / den
}

/// Weighted KNN imputation. Peptides missing exactly one side take the
/// inverse-distance-weighted mean of the other-side intensities of the `k`
/// complete pairs nearest in the observed coordinate. Peptides missing
/// both sides take the weighted mean pair of the `k` complete pairs whose
/// midpoints are nearest the protein's observed mean; proteins with no
/// observations at all are left untouched. Observed values are never
/// altered. With fewer than `k` candidates all of them are used (with a
/// warning); with none, the slot stays missing.
pub fn knn_impute(ds: &Dataset, k: usize) -> Dataset {
    let index = NeighborIndex::build(ds);
    if index.entries.len() < k {
        log::warn!(
            "knn imputation: only {} complete pairs available for k={k}",
            index.entries.len()
        );
    }
    let mut pairs: Vec<PeptidePair> = Vec::new();
    for g in &ds.proteins {
        let obs: Vec<f64> = g
            .peptides
            .iter()
            .flat_map(|p| [p.y_a, p.y_b])
            .flatten()
            .collect();
        let protein_mean = if obs.is_empty() {
            None
        } else {
            Some(obs.iter().sum::<f64>() / obs.len() as f64)
        };
        for p in &g.peptides {
            let mut pair = p.clone();
            match (p.y_a, p.y_b) {
                (Some(_), Some(_)) => {}
                (Some(a), None) => {
                    let nn = index.k_nearest(&index.by_a, |e| e.0, a, k);
                    if !nn.is_empty() {
                        pair.y_b = Some(weighted_mean(&nn, |i| index.entries[i].1));
                    }
                }
                (None, Some(b)) => {
                    let nn = index.k_nearest(&index.by_b, |e| e.1, b, k);
                    if !nn.is_empty() {
                        pair.y_a = Some(weighted_mean(&nn, |i| index.entries[i].0));
                    }
                }
                (None, None) => {
                    if let Some(m) = protein_mean {
                        let nn =
                            index.k_nearest(&index.by_mid, |e| (e.0 + e.1) / 2.0, m, k);
                        if !nn.is_empty() {
                            pair.y_a = Some(weighted_mean(&nn, |i| index.entries[i].0));
                            pair.y_b = Some(weighted_mean(&nn, |i| index.entries[i].1));
                        }
                    }
                }
            }
            pairs.push(pair);
        }
    }
    let provenance = format!("{};knn_impute=k{k}", ds.provenance);
    Dataset::from_pairs(pairs, provenance).expect("keys preserved from valid dataset")
}

/// QRollup after KNN imputation. Applicable to every protein that has at
/// least one observation.
pub fn knnq(ds: &Dataset, k: usize) -> Vec<PointEstimate> {
    let imputed = knn_impute(ds, k);
    imputed
        .proteins
        .iter()
        .map(|g| {
            let mut est = qrollup(g);
            est.method = Method::Knnq;
            est
        })
        .collect()
}
