//! CSV surfaces: the canonical peptide-pair format, estimate tables, truth
//! tables, tidy score tables, and chain traces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! emitting a dataset we ingested reproduces the file byte-for-byte on the
//! canonical format, and identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::data::{Dataset, Method, PeptidePair, ProteinCategory};
use crate::error::Error;
use crate::eval::MethodScore;
use crate::gibbs::PosteriorSummary;
use crate::Result;

pub const DATASET_HEADER: &str = "protein_id,peptide_id,intensity_a,intensity_b";
pub const ESTIMATES_HEADER: &str =
    "protein_id,category,method,estimate,posterior_sd,ci_lower,ci_upper,n_peptides,n_matched_pairs";
pub const TRUTH_HEADER: &str = "protein_id,true_mu";
pub const SCORES_HEADER: &str = "replicate,method,category,missing_bin,level,mechanism,mse,correlation,n";
pub const TRACE_HEADER: &str = "iteration,parameter,value";

/// Ingestion options for the canonical CSV.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Treat intensities as raw (linear-scale) and log2-transform them.
    /// Non-positive raw values become missing.
    pub log2_transform: bool,
}

/// What happened during ingestion.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// Data rows seen (excluding the header).
    pub n_rows: usize,
    /// Rows skipped, with 1-based line numbers and reasons.
    pub rejected: Vec<(u64, String)>,
    /// Raw values blanked because they were non-positive under `log2_transform`.
    pub n_nonpositive_blanked: usize,
}

fn parse_intensity(field: &str, line: u64) -> std::result::Result<Option<f64>, (u64, String)> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(v) => Err((line, format!("non-finite intensity `{v}`"))),
        Err(_) => Err((line, format!("unparseable intensity `{trimmed}`"))),
    }
}

/// Read a canonical CSV into a [`Dataset`]. A malformed header, a duplicate
/// (protein, peptide) key, or a file with zero usable rows is fatal; rows
/// with unparseable intensities are skipped and reported by line number.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<(Dataset, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Ingest(format!("cannot read header: {e}")))?;
    let found = headers.iter().collect::<Vec<_>>().join(",");
    if found != DATASET_HEADER {
        return Err(Error::MalformedHeader {
            expected: DATASET_HEADER.to_string(),
            found,
        });
    }

    let mut report = IngestReport::default();
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, csv::Position::line);
                report.rejected.push((line, format!("malformed row: {e}")));
                continue;
            }
        };
        report.n_rows += 1;
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() != 4 {
            report
                .rejected
                .push((line, format!("expected 4 fields, found {}", record.len())));
            continue;
        }
        let protein_id = record[0].trim().to_string();
        let peptide_id = record[1].trim().to_string();
        if protein_id.is_empty() || peptide_id.is_empty() {
            report.rejected.push((line, "empty key field".into()));
            continue;
        }
        let parsed_a = parse_intensity(&record[2], line);
        let parsed_b = parse_intensity(&record[3], line);
        let (y_a, y_b) = match (parsed_a, parsed_b) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.rejected.push(e);
                continue;
            }
        };
        let transform = |v: Option<f64>, n_blanked: &mut usize| -> Option<f64> {
            if !opts.log2_transform {
                return v;
            }
            match v {
                Some(raw) if raw > 0.0 => Some(raw.log2()),
                Some(_) => {
                    *n_blanked += 1;
                    None
                }
                None => None,
            }
        };
        let y_a = transform(y_a, &mut report.n_nonpositive_blanked);
        let y_b = transform(y_b, &mut report.n_nonpositive_blanked);
        pairs.push(PeptidePair {
            protein_id,
            peptide_id,
            y_a,
            y_b,
        });
    }

    if report.n_nonpositive_blanked > 0 {
        log::warn!(
            "{} non-positive raw intensities became missing under log2 transform",
            report.n_nonpositive_blanked
        );
    }
    for (line, reason) in &report.rejected {
        log::warn!("line {line}: {reason}");
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let provenance = format!(
        "source={};log2={};rejected={}",
        path.display(),
        opts.log2_transform,
        report.rejected.len()
    );
    let dataset = Dataset::from_pairs(pairs, provenance)?;
    Ok((dataset, report))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

/// Write a dataset in the canonical format.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{DATASET_HEADER}")?;
    for g in &ds.proteins {
        for p in &g.peptides {
            writeln!(
                out,
                "{},{},{},{}",
                p.protein_id,
                p.peptide_id,
                fmt_opt(p.y_a),
                fmt_opt(p.y_b)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row of the shared estimates table. Bayesian methods carry posterior
/// SD and credible bounds; point estimators leave them empty.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub protein_id: String,
    pub category: ProteinCategory,
    pub method: Method,
    pub estimate: f64,
    pub posterior_sd: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub n_peptides: usize,
    pub n_matched_pairs: usize,
}

impl EstimateRow {
    pub fn from_summary(s: &PosteriorSummary, method: Method, n_peptides: usize, n_matched: usize) -> Self {
        EstimateRow {
            protein_id: s.protein_id.clone(),
            category: s.category,
            method,
            estimate: s.post_mean,
            posterior_sd: Some(s.post_sd),
            ci_lower: Some(s.ci_lower),
            ci_upper: Some(s.ci_upper),
            n_peptides,
            n_matched_pairs: n_matched,
        }
    }
}

pub fn write_estimates_csv(rows: &[EstimateRow], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{ESTIMATES_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.protein_id,
            r.category,
            r.method,
            r.estimate,
            fmt_opt(r.posterior_sd),
            fmt_opt(r.ci_lower),
            fmt_opt(r.ci_upper),
            r.n_peptides,
            r.n_matched_pairs
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_estimates_csv(path: &Path) -> Result<Vec<EstimateRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != ESTIMATES_HEADER {
        return Err(Error::MalformedHeader {
            expected: ESTIMATES_HEADER.to_string(),
            found: headers,
        });
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        let s = s.trim();
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| Error::Ingest(format!("bad float `{s}`: {e}")))
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        rows.push(EstimateRow {
            protein_id: r[0].to_string(),
            category: r[1].parse()?,
            method: r[2].parse()?,
            estimate: r[3]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad estimate: {e}")))?,
            posterior_sd: parse_opt(&r[4])?,
            ci_lower: parse_opt(&r[5])?,
            ci_upper: parse_opt(&r[6])?,
            n_peptides: r[7]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad n_peptides: {e}")))?,
            n_matched_pairs: r[8]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad n_matched_pairs: {e}")))?,
        });
    }
    Ok(rows)
}

pub fn write_truth_csv(truth: &[(String, f64)], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRUTH_HEADER}")?;
    for (id, mu) in truth {
        writeln!(out, "{id},{mu}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let mu = r[1]
            .parse()
            .map_err(|e| Error::Ingest(format!("bad true_mu: {e}")))?;
        rows.push((r[0].to_string(), mu));
    }
    Ok(rows)
}

/// Serialize score rows as the tidy table
/// `replicate,method,category,missing_bin,level,mechanism,mse,correlation,n`.
pub fn scores_to_csv_string(rows: &[MethodScore]) -> String {
    let mut s = String::new();
    s.push_str(SCORES_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.replicate,
            r.method,
            r.category,
            r.missing_bin.map(|b| b.to_string()).unwrap_or_default(),
            fmt_opt(r.level),
            r.mechanism.clone().unwrap_or_default(),
            r.mse,
            fmt_opt(r.correlation),
            r.n_proteins
        );
    }
    s
}

pub fn write_scores_csv(rows: &[MethodScore], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(scores_to_csv_string(rows).as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<MethodScore>> {
    use crate::eval::{MissingBin, ScoreCategory};
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != SCORES_HEADER {
        return Err(Error::MalformedHeader {
            expected: SCORES_HEADER.to_string(),
            found: headers,
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let bin = if r[3].is_empty() {
            None
        } else {
            Some(r[3].parse::<MissingBin>()?)
        };
        let level = if r[4].is_empty() {
            None
        } else {
            Some(
                r[4].parse()
                    .map_err(|e| Error::Ingest(format!("bad level: {e}")))?,
            )
        };
        let correlation = if r[7].is_empty() {
            None
        } else {
            Some(
                r[7].parse()
                    .map_err(|e| Error::Ingest(format!("bad correlation: {e}")))?,
            )
        };
        rows.push(MethodScore {
            replicate: r[0]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad replicate: {e}")))?,
            method: r[1].parse()?,
            category: r[2].parse::<ScoreCategory>()?,
            missing_bin: bin,
            level,
            mechanism: if r[5].is_empty() {
                None
            } else {
                Some(r[5].to_string())
            },
            mse: r[6]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad mse: {e}")))?,
            correlation,
            n_proteins: r[8]
                .parse()
                .map_err(|e| Error::Ingest(format!("bad n: {e}")))?,
        });
    }
    Ok(rows)
}

/// Write a chain trace as `iteration,parameter,value` rows.
pub fn write_trace_csv(rows: &[(usize, String, f64)], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRACE_HEADER}")?;
    for (iter, param, value) in rows {
        writeln!(out, "{iter},{param},{value}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::categorize;
    use tempfile::NamedTempFile;

    fn write_tmp(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn ingest_matched_and_one_sided() {
        let f = write_tmp(
            "protein_id,peptide_id,intensity_a,intensity_b\n\
             P1,p1,18.2,17.9\n\
             P1,p2,16.0,\n\
             P2,p1,15.0,\n\
             P2,p2,14.1,\n",
        );
        let (ds, report) = ingest_csv(f.path(), &IngestOptions::default()).unwrap();
        assert_eq!(report.n_rows, 4);
        assert!(report.rejected.is_empty());
        assert_eq!(ds.n_proteins(), 2);
        let p1 = ds.get("P1").unwrap();
        assert_eq!(p1.n_peptides(), 2);
        assert_eq!(p1.category, ProteinCategory::Matched);
        assert_eq!(ds.get("P2").unwrap().category, ProteinCategory::OneSided);
    }

    #[test]
    fn ingest_rejects_bad_rows_with_line_numbers() {
        let f = write_tmp(
            "protein_id,peptide_id,intensity_a,intensity_b\n\
             P1,p1,18.2,17.9\n\
             P1,p2,oops,17.0\n\
             P1,p3,12.0,11.5\n",
        );
        let (ds, report) = ingest_csv(f.path(), &IngestOptions::default()).unwrap();
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].0, 3);
        assert_eq!(ds.get("P1").unwrap().n_peptides(), 2);
    }

    #[test]
    fn ingest_fatal_errors() {
        let bad_header = write_tmp("protein,peptide,a,b\nP1,p1,1,2\n");
        assert!(matches!(
            ingest_csv(bad_header.path(), &IngestOptions::default()),
            Err(Error::MalformedHeader { .. })
        ));

        let dup = write_tmp(
            "protein_id,peptide_id,intensity_a,intensity_b\n\
             P1,p1,1,2\nP1,p1,3,4\n",
        );
        assert!(matches!(
            ingest_csv(dup.path(), &IngestOptions::default()),
            Err(Error::DuplicateKey { .. })
        ));

        let empty = write_tmp("protein_id,peptide_id,intensity_a,intensity_b\n");
        assert!(matches!(
            ingest_csv(empty.path(), &IngestOptions::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn log2_transform_blanks_non_positive() {
        let f = write_tmp(
            "protein_id,peptide_id,intensity_a,intensity_b\n\
             P1,p1,1024,0\n\
             P1,p2,2048,-3\n",
        );
        let opts = IngestOptions {
            log2_transform: true,
        };
        let (ds, report) = ingest_csv(f.path(), &opts).unwrap();
        assert_eq!(report.n_nonpositive_blanked, 2);
        let g = ds.get("P1").unwrap();
        assert_eq!(g.peptides[0].y_a, Some(10.0));
        assert_eq!(g.peptides[0].y_b, None);
        assert_eq!(g.peptides[1].y_a, Some(11.0));
        assert_eq!(g.category, ProteinCategory::OneSided);
    }

    #[test]
    fn dataset_round_trips_byte_for_byte() {
        let content = "protein_id,peptide_id,intensity_a,intensity_b\n\
                       P1,p1,18.2,17.9\n\
                       P1,p2,16,\n\
                       P2,p1,,14.25\n";
        let f = write_tmp(content);
        let (ds, _) = ingest_csv(f.path(), &IngestOptions::default()).unwrap();
        let out = NamedTempFile::new().unwrap();
        write_dataset_csv(&ds, out.path()).unwrap();
        let emitted = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(emitted, content);

        // and again through a second ingest
        let (ds2, _) = ingest_csv(out.path(), &IngestOptions::default()).unwrap();
        for (g, g2) in ds.proteins.iter().zip(&ds2.proteins) {
            assert_eq!(g.peptides, g2.peptides);
            assert_eq!(g.category, categorize(g2));
        }
    }

    #[test]
    fn estimates_round_trip() {
        let rows = vec![
            EstimateRow {
                protein_id: "P1".into(),
                category: ProteinCategory::Matched,
                method: Method::Med,
                estimate: 1.25,
                posterior_sd: None,
                ci_lower: None,
                ci_upper: None,
                n_peptides: 3,
                n_matched_pairs: 2,
            },
            EstimateRow {
                protein_id: "P2".into(),
                category: ProteinCategory::OneSided,
                method: Method::M5,
                estimate: -2.5,
                posterior_sd: Some(0.8),
                ci_lower: Some(-4.1),
                ci_upper: Some(-0.9),
                n_peptides: 1,
                n_matched_pairs: 0,
            },
        ];
        let f = NamedTempFile::new().unwrap();
        write_estimates_csv(&rows, f.path()).unwrap();
        let back = read_estimates_csv(f.path()).unwrap();
        assert_eq!(rows, back);
    }
}
