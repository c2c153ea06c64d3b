//! Domain types: peptide pairs, protein groups, observation categories,
//! and the dataset-level transforms (category recomputation, dropping
//! fully-missing proteins, complete-case reduction).
//!
//! Intensities are log-scale throughout. A peptide pair holds the two
//! (possibly missing) log-intensities of one peptide measured in samples A
//! and B; a protein groups its peptide pairs. All types are immutable
//! after construction and safe to share across workers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Which of the two samples a slot belongs to. Sample A enters the mean
/// structure as `alpha + mu/2`, sample B as `alpha - mu/2`, so the fold
/// change is `mu = A - B` on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sample {
    A,
    B,
}

impl Sample {
    pub const BOTH: [Sample; 2] = [Sample::A, Sample::B];

    /// Sign of the `mu/2` term in the mean structure.
    pub fn sign(self) -> f64 {
        match self {
            Sample::A => 1.0,
            Sample::B => -1.0,
        }
    }
}

/// One peptide's pair of log-intensities, either of which may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct PeptidePair {
    pub protein_id: String,
    pub peptide_id: String,
    pub y_a: Option<f64>,
    pub y_b: Option<f64>,
}

impl PeptidePair {
    pub fn slot(&self, sample: Sample) -> Option<f64> {
        match sample {
            Sample::A => self.y_a,
            Sample::B => self.y_b,
        }
    }

    /// Observation indicators; true means the slot was observed. These are
    /// structural (a slot is observed exactly when it holds a value).
    pub fn indicator(&self) -> ObservationIndicator {
        ObservationIndicator {
            r_a: self.y_a.is_some(),
            r_b: self.y_b.is_some(),
        }
    }

    /// Both intensities observed: a matched pair.
    pub fn is_complete(&self) -> bool {
        self.y_a.is_some() && self.y_b.is_some()
    }

    pub fn n_observed(&self) -> usize {
        usize::from(self.y_a.is_some()) + usize::from(self.y_b.is_some())
    }
}

/// Observed/missing pattern of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationIndicator {
    pub r_a: bool,
    pub r_b: bool,
}

/// Observation category of a protein. The four categories partition all
/// proteins:
/// - `Matched`: at least one peptide observed in both samples.
/// - `Unmatched`: observations in both samples but never in the same peptide.
/// - `OneSided`: all observations from exactly one sample.
/// - `Missing`: no observed intensities at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProteinCategory {
    Matched,
    Unmatched,
    OneSided,
    Missing,
}

impl fmt::Display for ProteinCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProteinCategory::Matched => "Matched",
            ProteinCategory::Unmatched => "Unmatched",
            ProteinCategory::OneSided => "OneSided",
            ProteinCategory::Missing => "Missing",
        };
        f.write_str(s)
    }
}

impl FromStr for ProteinCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Matched" => Ok(ProteinCategory::Matched),
            "Unmatched" => Ok(ProteinCategory::Unmatched),
            "OneSided" => Ok(ProteinCategory::OneSided),
            "Missing" => Ok(ProteinCategory::Missing),
            other => Err(Error::Parameter(format!("unknown category `{other}`"))),
        }
    }
}

/// A protein with its peptide pairs and (pre-computed, recomputable)
/// observation category.
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinGroup {
    pub protein_id: String,
    pub peptides: Vec<PeptidePair>,
    pub category: ProteinCategory,
}

impl ProteinGroup {
    /// Build a group and compute its category. Panics if `peptides` is
    /// empty; a protein exists only through its peptides.
    pub fn new(protein_id: String, peptides: Vec<PeptidePair>) -> Self {
        assert!(!peptides.is_empty(), "protein {protein_id} has no peptides");
        let category = categorize_peptides(&peptides);
        ProteinGroup {
            protein_id,
            peptides,
            category,
        }
    }

    /// Number of peptide pairs, `m_i`.
    pub fn n_peptides(&self) -> usize {
        self.peptides.len()
    }

    pub fn n_matched_pairs(&self) -> usize {
        self.peptides.iter().filter(|p| p.is_complete()).count()
    }

    /// Fraction of the protein's `2 m_i` intensity slots that are missing.
    pub fn missing_fraction(&self) -> f64 {
        let observed: usize = self.peptides.iter().map(PeptidePair::n_observed).sum();
        let slots = 2 * self.peptides.len();
        (slots - observed) as f64 / slots as f64
    }

    pub fn observed_values(&self, sample: Sample) -> impl Iterator<Item = f64> + '_ {
        self.peptides.iter().filter_map(move |p| p.slot(sample))
    }
}

/// Category of a protein from its observation pattern. Total: exactly one
/// category holds for any peptide list.
pub fn categorize(protein: &ProteinGroup) -> ProteinCategory {
    categorize_peptides(&protein.peptides)
}

pub(crate) fn categorize_peptides(peptides: &[PeptidePair]) -> ProteinCategory {
    let mut any_pair = false;
    let mut seen_a = false;
    let mut seen_b = false;
    for p in peptides {
        any_pair |= p.is_complete();
        seen_a |= p.y_a.is_some();
        seen_b |= p.y_b.is_some();
    }
    if any_pair {
        ProteinCategory::Matched
    } else if seen_a && seen_b {
        ProteinCategory::Unmatched
    } else if seen_a || seen_b {
        ProteinCategory::OneSided
    } else {
        ProteinCategory::Missing
    }
}

/// Per-category protein counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryCounts {
    pub matched: usize,
    pub unmatched: usize,
    pub one_sided: usize,
    pub missing: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.matched + self.unmatched + self.one_sided + self.missing
    }
}

/// An in-memory collection of protein groups plus free-text provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub proteins: Vec<ProteinGroup>,
    pub provenance: String,
}

impl Dataset {
    /// Group a flat list of pairs by protein (first-appearance order),
    /// checking key uniqueness and computing categories.
    pub fn from_pairs(pairs: Vec<PeptidePair>, provenance: String) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut order: Vec<String> = Vec::new();
        let mut grouped: HashMap<String, Vec<PeptidePair>> = HashMap::new();
        let mut seen_keys: HashMap<(String, String), ()> = HashMap::new();
        for pair in pairs {
            let key = (pair.protein_id.clone(), pair.peptide_id.clone());
            if seen_keys.insert(key, ()).is_some() {
                return Err(Error::DuplicateKey {
                    protein_id: pair.protein_id,
                    peptide_id: pair.peptide_id,
                });
            }
            grouped
                .entry(pair.protein_id.clone())
                .or_insert_with(|| {
                    order.push(pair.protein_id.clone());
                    Vec::new()
                })
                .push(pair);
        }
        let proteins = order
            .into_iter()
            .map(|id| {
                let peptides = grouped.remove(&id).expect("grouped by construction");
                ProteinGroup::new(id, peptides)
            })
            .collect();
        Ok(Dataset {
            proteins,
            provenance,
        })
    }

    pub fn n_proteins(&self) -> usize {
        self.proteins.len()
    }

    /// Total intensity slots, `2 * sum(m_i)`.
    pub fn n_slots(&self) -> usize {
        2 * self.proteins.iter().map(ProteinGroup::n_peptides).sum::<usize>()
    }

    pub fn n_missing_slots(&self) -> usize {
        self.n_slots()
            - self
                .proteins
                .iter()
                .flat_map(|g| g.peptides.iter())
                .map(PeptidePair::n_observed)
                .sum::<usize>()
    }

    pub fn category_counts(&self) -> CategoryCounts {
        let mut c = CategoryCounts::default();
        for g in &self.proteins {
            match g.category {
                ProteinCategory::Matched => c.matched += 1,
                ProteinCategory::Unmatched => c.unmatched += 1,
                ProteinCategory::OneSided => c.one_sided += 1,
                ProteinCategory::Missing => c.missing += 1,
            }
        }
        c
    }

    /// Every observed intensity in the dataset, in protein/peptide order.
    pub fn observed_intensities(&self) -> Vec<f64> {
        self.proteins
            .iter()
            .flat_map(|g| g.peptides.iter())
            .flat_map(|p| [p.y_a, p.y_b])
            .flatten()
            .collect()
    }

    pub fn get(&self, protein_id: &str) -> Option<&ProteinGroup> {
        self.proteins.iter().find(|g| g.protein_id == protein_id)
    }
}

/// Remove `Missing`-category proteins. Returns the reduced dataset and the
/// number of proteins removed.
pub fn drop_missing_proteins(ds: &Dataset) -> (Dataset, usize) {
    let kept: Vec<ProteinGroup> = ds
        .proteins
        .iter()
        .filter(|g| g.category != ProteinCategory::Missing)
        .cloned()
        .collect();
    let removed = ds.proteins.len() - kept.len();
    let ds = Dataset {
        proteins: kept,
        provenance: format!("{};drop_missing={removed}", ds.provenance),
    };
    (ds, removed)
}

/// Keep only peptide pairs observed in both samples; proteins left with no
/// pairs are dropped. Every surviving protein is `Matched`.
pub fn complete_case_reduce(ds: &Dataset) -> Dataset {
    let proteins: Vec<ProteinGroup> = ds
        .proteins
        .iter()
        .filter_map(|g| {
            let complete: Vec<PeptidePair> = g
                .peptides
                .iter()
                .filter(|p| p.is_complete())
                .cloned()
                .collect();
            if complete.is_empty() {
                None
            } else {
                Some(ProteinGroup::new(g.protein_id.clone(), complete))
            }
        })
        .collect();
    Dataset {
        proteins,
        provenance: format!("{};complete_case", ds.provenance),
    }
}

/// Estimation method identifiers shared by the estimators, the score
/// tables, and the estimates CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Method {
    M5,
    M3,
    Med,
    Anova,
    Q,
    Knnq,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::M5,
        Method::M3,
        Method::Med,
        Method::Anova,
        Method::Q,
        Method::Knnq,
    ];

    /// Can this method produce an estimate for a protein of the given
    /// (original) category?
    pub fn applies_to(self, category: ProteinCategory) -> bool {
        match self {
            Method::M5 | Method::M3 | Method::Knnq => category != ProteinCategory::Missing,
            Method::Med => category == ProteinCategory::Matched,
            Method::Anova | Method::Q => {
                matches!(category, ProteinCategory::Matched | ProteinCategory::Unmatched)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::M5 => "M5",
            Method::M3 => "M3",
            Method::Med => "MED",
            Method::Anova => "ANOVA",
            Method::Q => "Q",
            Method::Knnq => "KNNQ",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m5" => Ok(Method::M5),
            "m3" => Ok(Method::M3),
            "med" | "median" => Ok(Method::Med),
            "anova" => Ok(Method::Anova),
            "q" | "qrollup" => Ok(Method::Q),
            "knnq" => Ok(Method::Knnq),
            other => Err(Error::Parameter(format!("unknown method `{other}`"))),
        }
    }
}
