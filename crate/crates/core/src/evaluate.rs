//! Scoring of relevance and geolocation predictions against the human
//! gold standard.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::geolocate::{GeoResult, Verdict};

/// One human-annotated document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub doc_id: String,
    pub relevant: bool,
    pub countries: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_accuracy: f64,
    pub overlap_accuracy: f64,
    pub counts: ConfusionCounts,
    /// Histogram of |countries| per document: predicted side.
    pub predicted_cardinality: BTreeMap<usize, usize>,
    /// Histogram of |countries| per document: gold side.
    pub gold_cardinality: BTreeMap<usize, usize>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and gold doc_id sets differ; only in preds: {only_preds:?}, only in gold: {only_gold:?}")]
    IdMismatch {
        only_preds: Vec<String>,
        only_gold: Vec<String>,
    },
    #[error("unreadable gold file: {0}")]
    UnreadableGold(String),
    #[error("malformed gold row at line {0}")]
    MalformedGold(usize),
}

/// Parse the gold annotation file: delimited text with header
/// {doc_id, relevant, countries}, countries semicolon-joined or empty.
pub fn parse_gold_file(path: &Path) -> Result<Vec<GoldRecord>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::UnreadableGold(format!("{}: {e}", path.display())))?;
    let delimiter = if text.lines().next().is_some_and(|h| h.contains('\t')) {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|_| EvalError::MalformedGold(line))?;
        if row.len() < 2 {
            return Err(EvalError::MalformedGold(line));
        }
        let relevant = match row[1].trim() {
            "1" => true,
            "0" => false,
            _ => return Err(EvalError::MalformedGold(line)),
        };
        let countries: BTreeSet<String> = row
            .get(2)
            .map(|c| {
                c.split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.to_uppercase())
                    .collect()
            })
            .unwrap_or_default();
        records.push(GoldRecord {
            doc_id: row[0].trim().to_string(),
            relevant,
            countries,
        });
    }
    Ok(records)
}

fn check_ids(preds: &[GeoResult], gold: &[GoldRecord]) -> Result<(), EvalError> {
    let pred_ids: BTreeSet<&str> = preds.iter().map(|p| p.doc_id.as_str()).collect();
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.doc_id.as_str()).collect();
    if pred_ids != gold_ids {
        return Err(EvalError::IdMismatch {
            only_preds: pred_ids
                .difference(&gold_ids)
                .map(|s| s.to_string())
                .collect(),
            only_gold: gold_ids
                .difference(&pred_ids)
                .map(|s| s.to_string())
                .collect(),
        });
    }
    Ok(())
}

/// Precision, recall and F1 with positive class = Relevant.
pub fn relevance_metrics(
    preds: &[GeoResult],
    gold: &[GoldRecord],
) -> Result<(f64, f64, f64, ConfusionCounts), EvalError> {
    check_ids(preds, gold)?;
    let gold_by_id: BTreeMap<&str, &GoldRecord> =
        gold.iter().map(|g| (g.doc_id.as_str(), g)).collect();
    let mut counts = ConfusionCounts::default();
    for pred in preds {
        let truth = gold_by_id[pred.doc_id.as_str()].relevant;
        let predicted = pred.verdict == Verdict::Relevant;
        match (predicted, truth) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    let (p, r, f1) = prf_from_counts(counts);
    Ok((p, r, f1, counts))
}

/// P/R/F1 from raw confusion counts (exposed for count-level checks).
pub fn prf_from_counts(counts: ConfusionCounts) -> (f64, f64, f64) {
    let p = if counts.tp + counts.fp > 0 {
        counts.tp as f64 / (counts.tp + counts.fp) as f64
    } else {
        0.0
    };
    let r = if counts.tp + counts.fn_ > 0 {
        counts.tp as f64 / (counts.tp + counts.fn_) as f64
    } else {
        0.0
    };
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1)
}

/// Exact and overlap accuracy over gold-relevant documents with non-empty
/// gold country sets, plus country-cardinality histograms for both sides.
pub fn geolocation_accuracy(
    preds: &[GeoResult],
    gold: &[GoldRecord],
) -> Result<(f64, f64, BTreeMap<usize, usize>, BTreeMap<usize, usize>), EvalError> {
    check_ids(preds, gold)?;
    let preds_by_id: BTreeMap<&str, &GeoResult> =
        preds.iter().map(|p| (p.doc_id.as_str(), p)).collect();
    let mut evaluated = 0usize;
    let mut exact = 0usize;
    let mut overlap = 0usize;
    let mut pred_hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut gold_hist: BTreeMap<usize, usize> = BTreeMap::new();
    for g in gold {
        if !g.relevant || g.countries.is_empty() {
            continue;
        }
        let pred = preds_by_id[g.doc_id.as_str()];
        let pred_set: BTreeSet<&str> = pred.countries.iter().map(String::as_str).collect();
        let gold_set: BTreeSet<&str> = g.countries.iter().map(String::as_str).collect();
        evaluated += 1;
        if pred_set == gold_set {
            exact += 1;
        }
        if pred_set.intersection(&gold_set).next().is_some() {
            overlap += 1;
        }
        *pred_hist.entry(pred_set.len()).or_insert(0) += 1;
        *gold_hist.entry(gold_set.len()).or_insert(0) += 1;
    }
    let exact_accuracy = if evaluated > 0 {
        exact as f64 / evaluated as f64
    } else {
        0.0
    };
    let overlap_accuracy = if evaluated > 0 {
        overlap as f64 / evaluated as f64
    } else {
        0.0
    };
    Ok((exact_accuracy, overlap_accuracy, pred_hist, gold_hist))
}

/// Full evaluation report over one prediction set.
pub fn evaluate(preds: &[GeoResult], gold: &[GoldRecord]) -> Result<EvalReport, EvalError> {
    let (precision, recall, f1, counts) = relevance_metrics(preds, gold)?;
    let (exact_accuracy, overlap_accuracy, predicted_cardinality, gold_cardinality) =
        geolocation_accuracy(preds, gold)?;
    Ok(EvalReport {
        precision,
        recall,
        f1,
        exact_accuracy,
        overlap_accuracy,
        counts,
        predicted_cardinality,
        gold_cardinality,
    })
}
