//! News document parsing, keyword filtering and the explosion of
//! multi-country documents into per-country data instances.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reference::{CountryReference, Normalized, RejectReason};

/// One archived news article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsDocument {
    pub doc_id: String,
    pub date: NaiveDate,
    pub outlet: String,
    pub title: String,
    pub body: String,
    pub text_hash: u64,
    pub text_type: Option<String>,
}

/// A (document, country) pair; the unit of counting downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataInstance {
    pub doc_id: String,
    pub date: NaiveDate,
    pub outlet: String,
    pub text_hash: u64,
    pub iso3: String,
    pub text_type: Option<String>,
}

/// Why a raw input record was rejected during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParseReject {
    BadJson,
    MissingId,
    BadDate,
    OutOfPeriod,
    EmptyBody,
}

impl ParseReject {
    pub fn label(self) -> &'static str {
        match self {
            ParseReject::BadJson => "bad_json",
            ParseReject::MissingId => "missing_id",
            ParseReject::BadDate => "bad_date",
            ParseReject::OutOfPeriod => "out_of_period",
            ParseReject::EmptyBody => "empty_body",
        }
    }
}

/// Per-reason tallies of rejected input records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RejectReport {
    pub counts: BTreeMap<String, usize>,
}

impl RejectReport {
    fn bump(&mut self, reason: ParseReject) {
        *self.counts.entry(reason.label().to_string()).or_insert(0) += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unreadable input: {0}")]
    UnreadableInput(#[from] std::io::Error),
}

/// Raw wire schema of one input line.
#[derive(Debug, Deserialize)]
struct RawDocument {
    id: Option<String>,
    date: Option<String>,
    #[serde(default)]
    outlet: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    body: String,
    #[serde(rename = "type")]
    text_type: Option<String>,
}

/// Normalize a body for hashing: lowercase, collapse whitespace runs.
fn normalize_text(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut last_was_space = true;
    for c in body.to_lowercase().chars() {
        if c.is_whitespace() {
            if !last_was_space {
                out.push(' ');
                last_was_space = true;
            }
        } else {
            out.push(c);
            last_was_space = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// 64-bit FNV-1a over the normalized body; stable across platforms.
pub fn text_hash(body: &str) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    for byte in normalize_text(body).as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Parse line-delimited JSON documents. Per-record problems never abort
/// the stream; they are tallied in the reject report. Order is preserved.
pub fn parse_documents<R: BufRead>(
    input: R,
    period: (NaiveDate, NaiveDate),
) -> Result<(Vec<NewsDocument>, RejectReport), CorpusError> {
    let mut documents = Vec::new();
    let mut report = RejectReport::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(_) => {
                report.bump(ParseReject::BadJson);
                continue;
            }
        };
        let doc_id = match raw.id {
            Some(id) if !id.trim().is_empty() => id,
            _ => {
                report.bump(ParseReject::MissingId);
                continue;
            }
        };
        let date = match raw.date.as_deref().map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d")) {
            Some(Ok(date)) => date,
            _ => {
                report.bump(ParseReject::BadDate);
                continue;
            }
        };
        if date < period.0 || date > period.1 {
            report.bump(ParseReject::OutOfPeriod);
            continue;
        }
        if raw.body.trim().is_empty() {
            report.bump(ParseReject::EmptyBody);
            continue;
        }
        let hash = text_hash(&raw.body);
        documents.push(NewsDocument {
            doc_id,
            date,
            outlet: raw.outlet,
            title: raw.title,
            body: raw.body,
            text_hash: hash,
            text_type: raw.text_type,
        });
    }
    Ok((documents, report))
}

/// The 17 German landslide query keywords.
pub fn default_keywords() -> Vec<String> {
    [
        "Erdrutsch",
        "Felssturz",
        "Felsstürz",
        "Schlammlawine",
        "Massenbewegung",
        "Hangrutsch",
        "Hangbewegung",
        "Rutschung",
        "Bodenrutsch",
        "Hangabrutschung",
        "Murgang",
        "Gerölllawine",
        "Rutschhang",
        "Rutschhäng",
        "Rutschgefahr",
        "Felslawine",
        "Mure",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// True iff title or body contains any keyword as a case-insensitive
/// substring. Substring semantics catch German compounds.
pub fn keyword_filter(doc: &NewsDocument, keywords: &[String]) -> bool {
    let title = doc.title.to_lowercase();
    let body = doc.body.to_lowercase();
    keywords.iter().any(|k| {
        let k = k.to_lowercase();
        title.contains(&k) || body.contains(&k)
    })
}

/// Counts of country codes dropped during instance explosion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DropTally {
    pub spurious: usize,
    pub excluded: usize,
    pub home: usize,
}

impl DropTally {
    pub fn bump(&mut self, reason: RejectReason) {
        match reason {
            RejectReason::Spurious => self.spurious += 1,
            RejectReason::Excluded => self.excluded += 1,
            RejectReason::Home => self.home += 1,
        }
    }
}

/// Explode each document into one instance per accepted country.
/// Rejected codes are dropped and tallied; (doc_id, iso3) pairs are unique.
pub fn explode_instances(
    docs: &[(NewsDocument, Vec<String>)],
    reference: &CountryReference,
) -> (Vec<DataInstance>, DropTally) {
    let mut instances = Vec::new();
    let mut tally = DropTally::default();
    for (doc, countries) in docs {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for raw in countries {
            match reference.normalize_country_code(raw) {
                Normalized::Accepted(iso3) => {
                    if seen.insert(iso3.clone()) {
                        instances.push(DataInstance {
                            doc_id: doc.doc_id.clone(),
                            date: doc.date,
                            outlet: doc.outlet.clone(),
                            text_hash: doc.text_hash,
                            iso3,
                            text_type: doc.text_type.clone(),
                        });
                    }
                }
                Normalized::Rejected(reason) => tally.bump(reason),
            }
        }
    }
    (instances, tally)
}
