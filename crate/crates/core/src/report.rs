//! Aggregate tables and plot-ready figure data.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::DataInstance;
use crate::events::NewsEvent;
use crate::reference::CountryReference;
use crate::salience::ExternalSource;

/// Country attribute a distribution table buckets by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dimension {
    Risk,
    Development,
    Continent,
    Subregion,
    Income,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Risk,
        Dimension::Development,
        Dimension::Continent,
        Dimension::Subregion,
        Dimension::Income,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Risk => "risk",
            Dimension::Development => "development",
            Dimension::Continent => "continent",
            Dimension::Subregion => "subregion",
            Dimension::Income => "income",
        }
    }
}

fn bucket_of(reference: &CountryReference, iso3: &str, dimension: Dimension) -> Option<String> {
    let record = reference.get(iso3)?;
    Some(match dimension {
        Dimension::Risk => record.risk.label().to_string(),
        Dimension::Development => record.development.label().to_string(),
        Dimension::Continent => record.continent().label().to_string(),
        Dimension::Subregion => record.subregion.label().to_string(),
        Dimension::Income => record.income.label().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopCountryRow {
    pub iso3: String,
    pub n_events: usize,
    pub n_documents: usize,
    pub n_active_days: usize,
}

/// Rank countries by event count, ties by document count then code.
/// Documents are counted once per (doc, country).
pub fn top_countries(
    events: &[NewsEvent],
    instances: &[DataInstance],
    k: usize,
) -> Vec<TopCountryRow> {
    let mut per_country: BTreeMap<&str, TopCountryRow> = BTreeMap::new();
    for event in events {
        per_country
            .entry(event.iso3.as_str())
            .or_insert_with(|| TopCountryRow {
                iso3: event.iso3.clone(),
                n_events: 0,
                n_documents: 0,
                n_active_days: 0,
            })
            .n_events += 1;
    }
    let mut docs: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut days: BTreeMap<&str, BTreeSet<chrono::NaiveDate>> = BTreeMap::new();
    for instance in instances {
        docs.entry(instance.iso3.as_str())
            .or_default()
            .insert(instance.doc_id.as_str());
        days.entry(instance.iso3.as_str())
            .or_default()
            .insert(instance.date);
    }
    for (iso3, row) in per_country.iter_mut() {
        row.n_documents = docs.get(iso3).map_or(0, BTreeSet::len);
        row.n_active_days = days.get(iso3).map_or(0, BTreeSet::len);
    }
    let mut rows: Vec<TopCountryRow> = per_country.into_values().collect();
    rows.sort_by(|a, b| {
        b.n_events
            .cmp(&a.n_events)
            .then(b.n_documents.cmp(&a.n_documents))
            .then(a.iso3.cmp(&b.iso3))
    });
    rows.truncate(k);
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub dimension: String,
    pub bucket: String,
    pub n_news_events: usize,
    pub pct_news: f64,
    pub pct_emdat: f64,
    pub pct_wbglhm: f64,
}

/// Bucket news events and the external measures by one country attribute.
/// All three percentage columns are normalized over the same bucket set.
pub fn distribution_table(
    events: &[NewsEvent],
    reference: &CountryReference,
    dimension: Dimension,
) -> Vec<DistributionRow> {
    let mut news: BTreeMap<String, usize> = BTreeMap::new();
    let mut emdat: BTreeMap<String, f64> = BTreeMap::new();
    let mut wbglhm: BTreeMap<String, f64> = BTreeMap::new();
    for event in events {
        if let Some(bucket) = bucket_of(reference, &event.iso3, dimension) {
            *news.entry(bucket).or_insert(0) += 1;
        }
    }
    for record in reference.analyzable() {
        let bucket = bucket_of(reference, &record.iso3, dimension).unwrap();
        *emdat.entry(bucket.clone()).or_insert(0.0) += f64::from(record.emdat_count);
        *wbglhm.entry(bucket).or_insert(0.0) += record.wbglhm_freq;
    }
    let buckets: BTreeSet<String> = news
        .keys()
        .chain(emdat.keys())
        .chain(wbglhm.keys())
        .cloned()
        .collect();
    let news_total: usize = news.values().sum();
    let emdat_total: f64 = emdat.values().sum();
    let wbglhm_total: f64 = wbglhm.values().sum();
    let pct = |value: f64, total: f64| if total > 0.0 { 100.0 * value / total } else { 0.0 };
    buckets
        .into_iter()
        .map(|bucket| {
            let n = news.get(&bucket).copied().unwrap_or(0);
            DistributionRow {
                dimension: dimension.label().to_string(),
                bucket: bucket.clone(),
                n_news_events: n,
                pct_news: pct(n as f64, news_total as f64),
                pct_emdat: pct(emdat.get(&bucket).copied().unwrap_or(0.0), emdat_total),
                pct_wbglhm: pct(wbglhm.get(&bucket).copied().unwrap_or(0.0), wbglhm_total),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearlyDeviation {
    pub year: i32,
    pub subregion: String,
    pub delta: f64,
}

/// Optional per-year EM-DAT records: (iso3, year) -> count.
pub type DatedExternal = BTreeMap<(String, i32), f64>;

/// Per-year news proportions by subregion minus external proportions.
/// The WB-GLHM external proportions are constant across years; EM-DAT uses
/// dated records when supplied and constant totals otherwise.
pub fn yearly_deviation(
    events: &[NewsEvent],
    reference: &CountryReference,
    source: ExternalSource,
    dated: Option<&DatedExternal>,
) -> Vec<YearlyDeviation> {
    use chrono::Datelike;

    let mut news: BTreeMap<(i32, String), usize> = BTreeMap::new();
    let mut years: BTreeSet<i32> = BTreeSet::new();
    for event in events {
        if let Some(sub) = bucket_of(reference, &event.iso3, Dimension::Subregion) {
            let year = event.first_day.year();
            years.insert(year);
            *news.entry((year, sub)).or_insert(0) += 1;
        }
    }

    // constant external proportions per subregion
    let mut external: BTreeMap<String, f64> = BTreeMap::new();
    for record in reference.analyzable() {
        let value = match source {
            ExternalSource::Emdat => f64::from(record.emdat_count),
            ExternalSource::Wbglhm => record.wbglhm_freq,
        };
        *external
            .entry(record.subregion.label().to_string())
            .or_insert(0.0) += value;
    }
    let external_total: f64 = external.values().sum();

    let subregions: BTreeSet<String> = external.keys().cloned().collect();
    let mut out = Vec::new();
    for &year in &years {
        let news_total: usize = subregions
            .iter()
            .map(|s| news.get(&(year, s.clone())).copied().unwrap_or(0))
            .sum();
        // per-year external proportions, when dated data is available
        let dated_for_year: Option<BTreeMap<&str, f64>> = match (source, dated) {
            (ExternalSource::Emdat, Some(dated)) => {
                let mut by_sub: BTreeMap<&str, f64> = BTreeMap::new();
                for ((iso3, y), count) in dated {
                    if *y == year {
                        if let Some(record) = reference.get(iso3) {
                            *by_sub.entry(record.subregion.label()).or_insert(0.0) += count;
                        }
                    }
                }
                Some(by_sub)
            }
            _ => None,
        };
        for sub in &subregions {
            let n = news.get(&(year, sub.clone())).copied().unwrap_or(0);
            let pct_news = if news_total > 0 {
                100.0 * n as f64 / news_total as f64
            } else {
                0.0
            };
            let pct_external = match &dated_for_year {
                Some(by_sub) => {
                    let total: f64 = by_sub.values().sum();
                    if total > 0.0 {
                        100.0 * by_sub.get(sub.as_str()).copied().unwrap_or(0.0) / total
                    } else {
                        0.0
                    }
                }
                None => {
                    if external_total > 0.0 {
                        100.0 * external.get(sub).copied().unwrap_or(0.0) / external_total
                    } else {
                        0.0
                    }
                }
            };
            out.push(YearlyDeviation {
                year,
                subregion: sub.clone(),
                delta: pct_news - pct_external,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSummary {
    pub subregion: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Five-number summary of the yearly deltas per subregion, for box plots.
pub fn deviation_box_summary(deviations: &[YearlyDeviation]) -> Vec<BoxSummary> {
    let mut per_sub: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for d in deviations {
        per_sub.entry(d.subregion.as_str()).or_default().push(d.delta);
    }
    per_sub
        .into_iter()
        .map(|(sub, mut deltas)| {
            deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            BoxSummary {
                subregion: sub.to_string(),
                min: deltas[0],
                q1: quantile(&deltas, 0.25),
                median: quantile(&deltas, 0.5),
                q3: quantile(&deltas, 0.75),
                max: deltas[deltas.len() - 1],
            }
        })
        .collect()
}
