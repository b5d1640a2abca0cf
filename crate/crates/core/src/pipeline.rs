//! Stage orchestration: each stage reads only upstream artifacts from the
//! output directory and writes only its own, so identical inputs and
//! config produce byte-identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CohortMode, RunConfig};
use crate::corpus::{self, DataInstance, NewsDocument};
use crate::evaluate::{self, GoldRecord};
use crate::events::{self, NewsEvent};
use crate::geolocate::{self, GeoResult, GeoTally, Verdict};
use crate::reference::{AdjustmentConfig, CountryReference, IndicatorPaths, LoadSummary};
use crate::report::{self, Dimension};
use crate::salience::{self, ExternalSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or missing input; exit code 1.
    Input,
    /// Failure while running; exit code 2.
    Runtime,
}

#[derive(Debug)]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub code: &'static str,
    pub detail: String,
}

impl PipelineError {
    fn input(code: &'static str, detail: impl Into<String>) -> PipelineError {
        PipelineError {
            kind: ErrorKind::Input,
            code,
            detail: detail.into(),
        }
    }

    fn runtime(code: &'static str, detail: impl Into<String>) -> PipelineError {
        PipelineError {
            kind: ErrorKind::Runtime,
            code,
            detail: detail.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 1,
            ErrorKind::Runtime => 2,
        }
    }
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{\"error\":\"{}\",\"detail\":{}}}", self.code, serde_json::to_string(&self.detail).unwrap_or_default())
    }
}

impl std::error::Error for PipelineError {}

type Result<T> = std::result::Result<T, PipelineError>;

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.paths
        .out_dir
        .as_deref()
        .ok_or_else(|| PipelineError::input("MissingConfig", "paths.out_dir is not set"))
}

fn artifact(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    Ok(out_dir(cfg)?.join(name))
}

fn require_input(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::input(
            "MissingInput",
            format!("{what} not found: {}", path.display()),
        ))
    }
}

/// Write a whole artifact via a temp file so failed runs never leave a
/// partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| PipelineError::runtime("Io", format!("{}: {e}", parent.display())))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)
        .map_err(|e| PipelineError::runtime("Io", format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| PipelineError::runtime("Io", format!("{}: {e}", path.display())))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn load_reference(cfg: &RunConfig) -> Result<(CountryReference, Vec<LoadSummary>)> {
    let country_file = cfg.paths.country_file.as_deref().ok_or_else(|| {
        PipelineError::input("MissingConfig", "paths.country_file is not set")
    })?;
    require_input(country_file, "country file")?;
    let adjustments = match cfg.paths.adjustments.as_deref() {
        Some(path) => AdjustmentConfig::from_file(path)
            .map_err(|e| PipelineError::input("BadAdjustments", e.to_string()))?,
        None => AdjustmentConfig::default(),
    };
    let indicators = IndicatorPaths {
        emdat: cfg.paths.emdat.clone(),
        wbglhm: cfg.paths.wbglhm.clone(),
        risk: cfg.paths.risk.clone(),
        development: cfg.paths.development.clone(),
        income: cfg.paths.income.clone(),
    };
    crate::reference::load_country_reference(
        country_file,
        &indicators,
        &adjustments,
        &cfg.home_country,
    )
    .map_err(|e| PipelineError::input("BadReference", e.to_string()))
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    documents: usize,
    rejected: BTreeMap<String, usize>,
    keyword_filtered_out: usize,
    flagged_long_bodies: usize,
}

/// Parse the raw document stream, apply the keyword pre-filter and write
/// the normalized corpus artifact.
pub fn run_ingest(cfg: &RunConfig) -> Result<()> {
    let input = cfg.paths.documents.as_deref().ok_or_else(|| {
        PipelineError::input("MissingConfig", "paths.documents is not set")
    })?;
    require_input(input, "documents file")?;
    let file = fs::File::open(input)
        .map_err(|e| PipelineError::input("UnreadableInput", e.to_string()))?;
    let (documents, rejects) = corpus::parse_documents(BufReader::new(file), cfg.period())
        .map_err(|e| PipelineError::input("UnreadableInput", e.to_string()))?;

    let keywords = cfg.effective_keywords();
    let mut kept = Vec::with_capacity(documents.len());
    let mut filtered_out = 0usize;
    let mut long_bodies = 0usize;
    for doc in documents {
        if cfg.long_body_threshold > 0 && doc.body.chars().count() > cfg.long_body_threshold {
            long_bodies += 1;
        }
        if cfg.keyword_filter && !corpus::keyword_filter(&doc, &keywords) {
            filtered_out += 1;
            continue;
        }
        kept.push(doc);
    }

    let mut buf = Vec::new();
    for doc in &kept {
        serde_json::to_writer(&mut buf, doc)
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        buf.push(b'\n');
    }
    write_atomic(&artifact(cfg, "docs.jsonl")?, &buf)?;
    write_json(
        &artifact(cfg, "ingest_summary.json")?,
        &IngestSummary {
            documents: kept.len(),
            rejected: rejects.counts,
            keyword_filtered_out: filtered_out,
            flagged_long_bodies: long_bodies,
        },
    )
}

pub fn read_docs(cfg: &RunConfig) -> Result<Vec<NewsDocument>> {
    let path = artifact(cfg, "docs.jsonl")?;
    require_input(&path, "docs.jsonl (run ingest first)")?;
    let file =
        fs::File::open(&path).map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
    let mut docs = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(
            serde_json::from_str(&line)
                .map_err(|e| PipelineError::runtime("BadArtifact", e.to_string()))?,
        );
    }
    Ok(docs)
}

fn read_gold(cfg: &RunConfig) -> Result<Vec<GoldRecord>> {
    let path = cfg.paths.annotations.as_deref().ok_or_else(|| {
        PipelineError::input("MissingConfig", "paths.annotations is not set")
    })?;
    require_input(path, "annotations file")?;
    evaluate::parse_gold_file(path).map_err(|e| PipelineError::input("BadGold", e.to_string()))
}

/// Geolocate the ingested corpus: against the configured endpoint when one
/// is set, otherwise from the annotations file. Writes georesults.jsonl,
/// geo_tally.json and instances.csv.
pub fn run_geolocate(cfg: &RunConfig) -> Result<()> {
    let docs = read_docs(cfg)?;
    let (reference, _) = load_reference(cfg)?;

    let (results, tally) = match cfg
        .client_config()
        .map_err(|e| PipelineError::input("BadConfig", e.to_string()))?
    {
        Some(client_cfg) => {
            let output = geolocate::geolocate_corpus(&docs, &client_cfg, &reference)
                .map_err(|e| match e {
                    geolocate::ClientError::EndpointDown { ref partial, .. } => {
                        // flush what we have before giving up
                        let _ = write_georesults(cfg, partial);
                        PipelineError::runtime("EndpointDown", e.to_string())
                    }
                    other => PipelineError::runtime("ClientError", other.to_string()),
                })?;
            (output.results, output.tally)
        }
        None => {
            let gold = read_gold(cfg)?;
            let by_id: BTreeMap<&str, &GoldRecord> =
                gold.iter().map(|g| (g.doc_id.as_str(), g)).collect();
            let mut tally = GeoTally::default();
            let results = docs
                .iter()
                .map(|doc| {
                    let (countries, verdict) = match by_id.get(doc.doc_id.as_str()) {
                        Some(g) if g.relevant && !g.countries.is_empty() => {
                            let mut accepted = Vec::new();
                            for code in &g.countries {
                                match reference.normalize_country_code(code) {
                                    crate::reference::Normalized::Accepted(c) => accepted.push(c),
                                    crate::reference::Normalized::Rejected(reason) => {
                                        match reason {
                                            crate::reference::RejectReason::Spurious => {
                                                tally.spurious += 1
                                            }
                                            crate::reference::RejectReason::Excluded => {
                                                tally.excluded += 1
                                            }
                                            crate::reference::RejectReason::Home => {
                                                tally.home += 1
                                            }
                                        }
                                    }
                                }
                            }
                            if accepted.is_empty() {
                                (Vec::new(), Verdict::Unrelated)
                            } else {
                                (accepted, Verdict::Relevant)
                            }
                        }
                        _ => (Vec::new(), Verdict::Unrelated),
                    };
                    GeoResult {
                        doc_id: doc.doc_id.clone(),
                        countries,
                        verdict,
                        raw_response: String::new(),
                    }
                })
                .collect();
            (results, tally)
        }
    };

    write_georesults(cfg, &results)?;
    write_json(&artifact(cfg, "geo_tally.json")?, &tally)?;

    // explode into instances
    let by_id: BTreeMap<&str, &GeoResult> =
        results.iter().map(|r| (r.doc_id.as_str(), r)).collect();
    let pairs: Vec<(NewsDocument, Vec<String>)> = docs
        .into_iter()
        .map(|doc| {
            let countries = by_id
                .get(doc.doc_id.as_str())
                .map(|r| r.countries.clone())
                .unwrap_or_default();
            (doc, countries)
        })
        .collect();
    let (instances, _) = corpus::explode_instances(&pairs, &reference);
    write_instances(cfg, &instances)
}

fn write_georesults(cfg: &RunConfig, results: &[GeoResult]) -> Result<()> {
    let mut buf = Vec::new();
    for result in results {
        serde_json::to_writer(&mut buf, result)
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        buf.push(b'\n');
    }
    write_atomic(&artifact(cfg, "georesults.jsonl")?, &buf)
}

pub fn read_georesults(cfg: &RunConfig) -> Result<Vec<GeoResult>> {
    let path = artifact(cfg, "georesults.jsonl")?;
    require_input(&path, "georesults.jsonl (run geolocate first)")?;
    let file =
        fs::File::open(&path).map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
    let mut results = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        results.push(
            serde_json::from_str(&line)
                .map_err(|e| PipelineError::runtime("BadArtifact", e.to_string()))?,
        );
    }
    Ok(results)
}

fn write_instances(cfg: &RunConfig, instances: &[DataInstance]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        writer
            .write_record(["doc_id", "date", "outlet", "text_hash", "iso3"])
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        for i in instances {
            writer
                .write_record([
                    i.doc_id.as_str(),
                    &i.date.format("%Y-%m-%d").to_string(),
                    i.outlet.as_str(),
                    &i.text_hash.to_string(),
                    i.iso3.as_str(),
                ])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        writer
            .flush()
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
    }
    write_atomic(&artifact(cfg, "instances.csv")?, &buf)
}

pub fn read_instances(cfg: &RunConfig) -> Result<Vec<DataInstance>> {
    let path = artifact(cfg, "instances.csv")?;
    require_input(&path, "instances.csv (run geolocate first)")?;
    let mut reader = csv::Reader::from_path(&path)
        .map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
    let mut instances = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| PipelineError::runtime("BadArtifact", e.to_string()))?;
        let date = NaiveDate::parse_from_str(&row[1], "%Y-%m-%d")
            .map_err(|e| PipelineError::runtime("BadArtifact", e.to_string()))?;
        let text_hash = row[3]
            .parse::<u64>()
            .map_err(|e| PipelineError::runtime("BadArtifact", e.to_string()))?;
        instances.push(DataInstance {
            doc_id: row[0].to_string(),
            date,
            outlet: row[2].to_string(),
            text_hash,
            iso3: row[4].to_string(),
            text_type: None,
        });
    }
    Ok(instances)
}

/// Build series, segment them and write events.csv. Text types are
/// recovered by joining instances back to the corpus artifact.
pub fn run_segment(cfg: &RunConfig) -> Result<()> {
    let mut instances = read_instances(cfg)?;
    let docs = read_docs(cfg)?;
    let types_by_id: BTreeMap<&str, &Option<String>> =
        docs.iter().map(|d| (d.doc_id.as_str(), &d.text_type)).collect();
    for instance in &mut instances {
        if let Some(t) = types_by_id.get(instance.doc_id.as_str()) {
            instance.text_type = (*t).clone();
        }
    }

    let series = events::build_series(&instances, cfg.period())
        .map_err(|e| PipelineError::runtime("OutOfPeriodInstance", e.to_string()))?;
    let mut per_country: BTreeMap<&str, Vec<&DataInstance>> = BTreeMap::new();
    for instance in &instances {
        per_country.entry(instance.iso3.as_str()).or_default().push(instance);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| PipelineError::runtime("ThreadPool", e.to_string()))?;
    let series_vec: Vec<_> = series.values().collect();
    let events: Vec<NewsEvent> = pool.install(|| {
        series_vec
            .par_iter()
            .map(|s| {
                let owned: Vec<DataInstance> = per_country
                    .get(s.iso3.as_str())
                    .map(|list| list.iter().map(|i| (*i).clone()).collect())
                    .unwrap_or_default();
                events::events_for_series(s, &owned, cfg.max_gap)
            })
            .flatten()
            .collect()
    });

    write_events(cfg, &events)
}

fn write_events(cfg: &RunConfig, events: &[NewsEvent]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        writer
            .write_record([
                "iso3",
                "first_day",
                "last_day",
                "peak_day",
                "n_at_peak",
                "total_volume",
                "duration_days",
                "days_since_last",
                "days_to_peak",
                "days_to_fade",
                "n_text_types",
                "n_outlets",
            ])
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        for e in events {
            let m = &e.measures;
            writer
                .write_record([
                    e.iso3.as_str(),
                    &e.first_day.format("%Y-%m-%d").to_string(),
                    &e.last_day.format("%Y-%m-%d").to_string(),
                    &e.peak_day.format("%Y-%m-%d").to_string(),
                    &m.n_at_peak.to_string(),
                    &m.total_volume.to_string(),
                    &m.duration_days.to_string(),
                    &m.days_since_last.map(|d| d.to_string()).unwrap_or_default(),
                    &m.days_to_peak.to_string(),
                    &m.days_to_fade.to_string(),
                    &m.n_text_types.to_string(),
                    &m.n_outlets.to_string(),
                ])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        writer
            .flush()
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
    }
    write_atomic(&artifact(cfg, "events.csv")?, &buf)
}

pub fn read_events(cfg: &RunConfig) -> Result<Vec<NewsEvent>> {
    let path = artifact(cfg, "events.csv")?;
    require_input(&path, "events.csv (run segment first)")?;
    let mut reader = csv::Reader::from_path(&path)
        .map_err(|e| PipelineError::runtime("Io", e.to_string()))?;
    let bad = |e: String| PipelineError::runtime("BadArtifact", e);
    let mut events = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let date = |s: &str| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| bad(e.to_string()))
        };
        events.push(NewsEvent {
            iso3: row[0].to_string(),
            first_day: date(&row[1])?,
            last_day: date(&row[2])?,
            peak_day: date(&row[3])?,
            measures: crate::events::EventMeasures {
                n_at_peak: row[4].parse().map_err(|_| bad("n_at_peak".into()))?,
                total_volume: row[5].parse().map_err(|_| bad("total_volume".into()))?,
                duration_days: row[6].parse().map_err(|_| bad("duration_days".into()))?,
                days_since_last: if row[7].is_empty() {
                    None
                } else {
                    Some(row[7].parse().map_err(|_| bad("days_since_last".into()))?)
                },
                days_to_peak: row[8].parse().map_err(|_| bad("days_to_peak".into()))?,
                days_to_fade: row[9].parse().map_err(|_| bad("days_to_fade".into()))?,
                n_text_types: row[10].parse().map_err(|_| bad("n_text_types".into()))?,
                n_outlets: row[11].parse().map_err(|_| bad("n_outlets".into()))?,
            },
        });
    }
    Ok(events)
}

/// Compute the full score table for one external source.
pub fn score_source(
    events: &[NewsEvent],
    reference: &CountryReference,
    source: ExternalSource,
    cohort_mode: CohortMode,
    band_fraction: f64,
) -> std::result::Result<Vec<ScoreRow>, salience::SalienceError> {
    let mut event_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for event in events {
        *event_counts.entry(event.iso3.as_str()).or_insert(0) += 1;
    }
    let mut news_values: BTreeMap<String, f64> = BTreeMap::new();
    let mut ext_values: BTreeMap<String, f64> = BTreeMap::new();
    for record in reference.analyzable() {
        let news = event_counts.get(record.iso3.as_str()).copied().unwrap_or(0) as f64;
        let ext = match source {
            ExternalSource::Emdat => f64::from(record.emdat_count),
            ExternalSource::Wbglhm => record.wbglhm_freq,
        };
        let include = match cohort_mode {
            CohortMode::All => true,
            CohortMode::NonzeroAny => news > 0.0 || ext > 0.0,
            CohortMode::NonzeroBoth => news > 0.0 && ext > 0.0,
        };
        if include {
            news_values.insert(record.iso3.clone(), news);
            ext_values.insert(record.iso3.clone(), ext);
        }
    }
    let news_scores = salience::salience_scores(&news_values)?;
    let ext_scores = salience::salience_scores(&ext_values)?;
    let pairs: BTreeMap<String, (f64, f64)> = news_values
        .keys()
        .map(|iso3| {
            (
                iso3.clone(),
                (ext_scores.scores[iso3], news_scores.scores[iso3]),
            )
        })
        .collect();
    let fit = salience::fit_regression(&pairs.values().copied().collect::<Vec<_>>())?;
    let mut records = salience::divergence(&fit, &pairs);
    salience::categorize(&mut records, band_fraction);
    let by_iso: BTreeMap<&str, &salience::DivergenceRecord> =
        records.iter().map(|r| (r.iso3.as_str(), r)).collect();
    Ok(news_values
        .keys()
        .map(|iso3| {
            let d = by_iso[iso3.as_str()];
            ScoreRow {
                iso3: iso3.clone(),
                raw_news: news_values[iso3] as u64,
                raw_ext: ext_values[iso3],
                salience_news: news_scores.scores[iso3],
                salience_ext: ext_scores.scores[iso3],
                divergence: d.divergence,
                category: d.category.label().to_string(),
                source: source.label().to_string(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreRow {
    pub iso3: String,
    pub raw_news: u64,
    pub raw_ext: f64,
    pub salience_news: f64,
    pub salience_ext: f64,
    pub divergence: f64,
    pub category: String,
    pub source: String,
}

pub fn run_score(cfg: &RunConfig) -> Result<()> {
    let events = read_events(cfg)?;
    let (reference, _) = load_reference(cfg)?;
    for source in [ExternalSource::Emdat, ExternalSource::Wbglhm] {
        let rows = score_source(
            &events,
            &reference,
            source,
            cfg.cohort_mode,
            cfg.band_fraction,
        )
        .map_err(|e| PipelineError::runtime("ScoreFailed", e.to_string()))?;
        let mut buf = Vec::new();
        {
            let mut writer = csv::Writer::from_writer(&mut buf);
            writer
                .write_record([
                    "iso3",
                    "raw_news",
                    "raw_ext",
                    "salience_news",
                    "salience_ext",
                    "divergence",
                    "category",
                    "source",
                ])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            for row in &rows {
                writer
                    .write_record([
                        row.iso3.as_str(),
                        &row.raw_news.to_string(),
                        &row.raw_ext.to_string(),
                        &row.salience_news.to_string(),
                        &row.salience_ext.to_string(),
                        &row.divergence.to_string(),
                        &row.category,
                        &row.source,
                    ])
                    .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            }
            writer
                .flush()
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        write_atomic(
            &artifact(cfg, &format!("scores_{}.csv", source.label()))?,
            &buf,
        )?;
    }
    Ok(())
}

pub fn run_evaluate(cfg: &RunConfig) -> Result<()> {
    let preds = read_georesults(cfg)?;
    let gold = read_gold(cfg)?;
    // restrict gold to the ingested corpus
    let pred_ids: std::collections::BTreeSet<&str> =
        preds.iter().map(|p| p.doc_id.as_str()).collect();
    let gold: Vec<GoldRecord> = gold
        .into_iter()
        .filter(|g| pred_ids.contains(g.doc_id.as_str()))
        .collect();
    let report = evaluate::evaluate(&preds, &gold)
        .map_err(|e| PipelineError::runtime("EvalFailed", e.to_string()))?;
    write_json(&artifact(cfg, "eval_report.json")?, &report)
}

fn read_emdat_dated(cfg: &RunConfig) -> Result<Option<report::DatedExternal>> {
    let Some(path) = cfg.paths.emdat_dated.as_deref() else {
        return Ok(None);
    };
    require_input(path, "dated EM-DAT file")?;
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| PipelineError::input("UnreadableInput", e.to_string()))?;
    let mut dated = report::DatedExternal::new();
    for row in reader.records() {
        let row =
            row.map_err(|e| PipelineError::input("UnreadableInput", e.to_string()))?;
        let year: i32 = row[1]
            .parse()
            .map_err(|_| PipelineError::input("UnreadableInput", "bad year".to_string()))?;
        let count: f64 = row[2]
            .parse()
            .map_err(|_| PipelineError::input("UnreadableInput", "bad count".to_string()))?;
        *dated.entry((row[0].to_uppercase(), year)).or_insert(0.0) += count;
    }
    Ok(Some(dated))
}

#[derive(Debug, Serialize)]
struct Manifest {
    config_hash: String,
    config_toml: String,
    cohort_mode: String,
    inputs: BTreeMap<String, String>,
    counts: ManifestCounts,
}

#[derive(Debug, Serialize)]
struct ManifestCounts {
    documents: usize,
    instances: usize,
    events: usize,
    countries_with_events: usize,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|bytes| sha256_hex(&bytes))
}

pub fn run_report(cfg: &RunConfig) -> Result<()> {
    let events = read_events(cfg)?;
    let instances = read_instances(cfg)?;
    let (reference, load_summaries) = load_reference(cfg)?;

    let mut buf = Vec::new();
    for summary in &load_summaries {
        serde_json::to_writer(&mut buf, summary)
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        buf.push(b'\n');
    }
    write_atomic(&artifact(cfg, "load_summary.jsonl")?, &buf)?;

    // top countries, full ranking
    let rows = report::top_countries(&events, &instances, usize::MAX);
    let mut buf = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        writer
            .write_record(["iso3", "n_events", "n_documents", "n_active_days"])
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        for row in &rows {
            writer
                .write_record([
                    row.iso3.as_str(),
                    &row.n_events.to_string(),
                    &row.n_documents.to_string(),
                    &row.n_active_days.to_string(),
                ])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        writer
            .flush()
            .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
    }
    write_atomic(&artifact(cfg, "top_countries.csv")?, &buf)?;

    for dimension in Dimension::ALL {
        let table = report::distribution_table(&events, &reference, dimension);
        let mut buf = Vec::new();
        {
            let mut writer = csv::Writer::from_writer(&mut buf);
            writer
                .write_record([
                    "dimension",
                    "bucket",
                    "n_news_events",
                    "pct_news",
                    "pct_emdat",
                    "pct_wbglhm",
                ])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            for row in &table {
                writer
                    .write_record([
                        row.dimension.as_str(),
                        row.bucket.as_str(),
                        &row.n_news_events.to_string(),
                        &row.pct_news.to_string(),
                        &row.pct_emdat.to_string(),
                        &row.pct_wbglhm.to_string(),
                    ])
                    .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            }
            writer
                .flush()
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        write_atomic(
            &artifact(cfg, &format!("distribution_{}.csv", dimension.label()))?,
            &buf,
        )?;
    }

    let dated = read_emdat_dated(cfg)?;
    for source in [ExternalSource::Emdat, ExternalSource::Wbglhm] {
        let deviations =
            report::yearly_deviation(&events, &reference, source, dated.as_ref());
        let mut buf = Vec::new();
        {
            let mut writer = csv::Writer::from_writer(&mut buf);
            writer
                .write_record(["year", "subregion", "delta"])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            for d in &deviations {
                writer
                    .write_record([
                        &d.year.to_string(),
                        d.subregion.as_str(),
                        &d.delta.to_string(),
                    ])
                    .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            }
            writer
                .flush()
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        write_atomic(
            &artifact(cfg, &format!("yearly_deviation_{}.csv", source.label()))?,
            &buf,
        )?;

        let boxes = report::deviation_box_summary(&deviations);
        let mut buf = Vec::new();
        {
            let mut writer = csv::Writer::from_writer(&mut buf);
            writer
                .write_record(["subregion", "min", "q1", "median", "q3", "max"])
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            for b in &boxes {
                writer
                    .write_record([
                        b.subregion.as_str(),
                        &b.min.to_string(),
                        &b.q1.to_string(),
                        &b.median.to_string(),
                        &b.q3.to_string(),
                        &b.max.to_string(),
                    ])
                    .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
            }
            writer
                .flush()
                .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
        }
        write_atomic(
            &artifact(
                cfg,
                &format!("yearly_deviation_box_{}.csv", source.label()),
            )?,
            &buf,
        )?;
    }

    // run manifest
    let config_toml = toml::to_string(cfg)
        .map_err(|e| PipelineError::runtime("Serialize", e.to_string()))?;
    let mut inputs = BTreeMap::new();
    for path in [
        &cfg.paths.documents,
        &cfg.paths.annotations,
        &cfg.paths.country_file,
        &cfg.paths.adjustments,
        &cfg.paths.emdat,
        &cfg.paths.wbglhm,
        &cfg.paths.risk,
        &cfg.paths.development,
        &cfg.paths.income,
        &cfg.paths.emdat_dated,
    ]
    .into_iter()
    .flatten()
    {
        if let Some(digest) = digest_file(path) {
            inputs.insert(path.display().to_string(), digest);
        }
    }
    let docs = read_docs(cfg)?;
    let countries_with_events: std::collections::BTreeSet<&str> =
        events.iter().map(|e| e.iso3.as_str()).collect();
    let manifest = Manifest {
        config_hash: sha256_hex(config_toml.as_bytes()),
        config_toml,
        cohort_mode: cfg.cohort_mode.label().to_string(),
        inputs,
        counts: ManifestCounts {
            documents: docs.len(),
            instances: instances.len(),
            events: events.len(),
            countries_with_events: countries_with_events.len(),
        },
    };
    write_json(&artifact(cfg, "summary.json")?, &manifest)
}

/// Run the whole pipeline in order. Evaluation runs when an annotations
/// file is configured.
pub fn run_all(cfg: &RunConfig) -> Result<()> {
    run_ingest(cfg)?;
    run_geolocate(cfg)?;
    run_segment(cfg)?;
    run_score(cfg)?;
    if cfg.paths.annotations.is_some() {
        run_evaluate(cfg)?;
    }
    run_report(cfg)
}
