//! Country reference list and country-level indicators.
//!
//! The reference is loaded once from delimited text files (UNSD-style
//! country list plus one file per indicator), adjusted by a declarative
//! adjustment file, and then shared read-only by the rest of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 17 UNSD subregions countries are grouped into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subregion {
    NorthernAfrica,
    SubSaharanAfrica,
    LatinAmericaCaribbean,
    NorthernAmerica,
    CentralAsia,
    EasternAsia,
    SouthEasternAsia,
    SouthernAsia,
    WesternAsia,
    EasternEurope,
    NorthernEurope,
    SouthernEurope,
    WesternEurope,
    AustraliaNewZealand,
    Melanesia,
    Micronesia,
    Polynesia,
}

impl Subregion {
    pub const ALL: [Subregion; 17] = [
        Subregion::NorthernAfrica,
        Subregion::SubSaharanAfrica,
        Subregion::LatinAmericaCaribbean,
        Subregion::NorthernAmerica,
        Subregion::CentralAsia,
        Subregion::EasternAsia,
        Subregion::SouthEasternAsia,
        Subregion::SouthernAsia,
        Subregion::WesternAsia,
        Subregion::EasternEurope,
        Subregion::NorthernEurope,
        Subregion::SouthernEurope,
        Subregion::WesternEurope,
        Subregion::AustraliaNewZealand,
        Subregion::Melanesia,
        Subregion::Micronesia,
        Subregion::Polynesia,
    ];

    /// Fixed total mapping from subregion to continent.
    pub fn continent(self) -> Continent {
        use Subregion::*;
        match self {
            NorthernAfrica | SubSaharanAfrica => Continent::Africa,
            LatinAmericaCaribbean | NorthernAmerica => Continent::Americas,
            CentralAsia | EasternAsia | SouthEasternAsia | SouthernAsia | WesternAsia => {
                Continent::Asia
            }
            EasternEurope | NorthernEurope | SouthernEurope | WesternEurope => Continent::Europe,
            AustraliaNewZealand | Melanesia | Micronesia | Polynesia => Continent::Oceania,
        }
    }

    pub fn label(self) -> &'static str {
        use Subregion::*;
        match self {
            NorthernAfrica => "Northern Africa",
            SubSaharanAfrica => "Sub-Saharan Africa",
            LatinAmericaCaribbean => "Latin America/Caribbean",
            NorthernAmerica => "Northern America",
            CentralAsia => "Central Asia",
            EasternAsia => "Eastern Asia",
            SouthEasternAsia => "South-eastern Asia",
            SouthernAsia => "Southern Asia",
            WesternAsia => "Western Asia",
            EasternEurope => "Eastern Europe",
            NorthernEurope => "Northern Europe",
            SouthernEurope => "Southern Europe",
            WesternEurope => "Western Europe",
            AustraliaNewZealand => "Australia/New Zealand",
            Melanesia => "Melanesia",
            Micronesia => "Micronesia",
            Polynesia => "Polynesia",
        }
    }

    pub fn parse(raw: &str) -> Option<Subregion> {
        let key: String = raw
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Subregion::ALL
            .iter()
            .copied()
            .find(|s| {
                let label: String = s
                    .label()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                label == key
            })
    }
}

impl fmt::Display for Subregion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Continent {
    Africa,
    Americas,
    Asia,
    Europe,
    Oceania,
}

impl Continent {
    pub const ALL: [Continent; 5] = [
        Continent::Africa,
        Continent::Americas,
        Continent::Asia,
        Continent::Europe,
        Continent::Oceania,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Continent::Africa => "Africa",
            Continent::Americas => "Americas",
            Continent::Asia => "Asia",
            Continent::Europe => "Europe",
            Continent::Oceania => "Oceania",
        }
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Development {
    GlobalNorth,
    GlobalSouth,
    #[default]
    Unknown,
}

impl Development {
    pub fn label(self) -> &'static str {
        match self {
            Development::GlobalNorth => "Global North",
            Development::GlobalSouth => "Global South",
            Development::Unknown => "unknown",
        }
    }

    fn parse(raw: &str) -> Development {
        match raw.trim().to_ascii_lowercase().as_str() {
            "developed" | "global north" | "north" => Development::GlobalNorth,
            "developing" | "global south" | "south" => Development::GlobalSouth,
            _ => Development::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Income {
    High,
    UpperMiddle,
    LowerMiddle,
    Low,
    #[default]
    Unknown,
}

impl Income {
    pub fn label(self) -> &'static str {
        match self {
            Income::High => "high",
            Income::UpperMiddle => "upper middle",
            Income::LowerMiddle => "lower middle",
            Income::Low => "low",
            Income::Unknown => "unknown",
        }
    }

    fn parse(raw: &str) -> Income {
        match raw.trim().to_ascii_lowercase().replace('-', " ").as_str() {
            "high" | "high income" => Income::High,
            "upper middle" | "upper middle income" | "upper mid" => Income::UpperMiddle,
            "lower middle" | "lower middle income" | "lower mid" => Income::LowerMiddle,
            "low" | "low income" => Income::Low,
            _ => Income::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Risk {
    High,
    Medium,
    Low,
    VeryLow,
    #[default]
    Unknown,
}

impl Risk {
    pub fn label(self) -> &'static str {
        match self {
            Risk::High => "high",
            Risk::Medium => "medium",
            Risk::Low => "low",
            Risk::VeryLow => "very low",
            Risk::Unknown => "unknown",
        }
    }

    fn parse(raw: &str) -> Risk {
        match raw.trim().to_ascii_lowercase().replace('_', " ").as_str() {
            "high" => Risk::High,
            "medium" => Risk::Medium,
            "low" => Risk::Low,
            "very low" => Risk::VeryLow,
            _ => Risk::Unknown,
        }
    }
}

/// One country with its identity and the five external indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub iso3: String,
    pub name: String,
    pub subregion: Subregion,
    pub development: Development,
    pub income: Income,
    pub risk: Risk,
    pub emdat_count: u32,
    pub wbglhm_freq: f64,
}

impl CountryRecord {
    pub fn continent(&self) -> Continent {
        self.subregion.continent()
    }
}

/// Why a raw country code was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    /// Not a known code or alias.
    Spurious,
    /// A real code that the reference excludes from analysis.
    Excluded,
    /// The configured home country.
    Home,
}

/// Outcome of normalizing a raw country code or name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Accepted(String),
    Rejected(RejectReason),
}

/// Immutable country reference shared by the whole pipeline.
#[derive(Debug, Clone)]
pub struct CountryReference {
    records: BTreeMap<String, CountryRecord>,
    excluded: BTreeSet<String>,
    alias_map: BTreeMap<String, String>,
    home: String,
}

impl CountryReference {
    pub fn records(&self) -> &BTreeMap<String, CountryRecord> {
        &self.records
    }

    pub fn excluded(&self) -> &BTreeSet<String> {
        &self.excluded
    }

    pub fn home(&self) -> &str {
        &self.home
    }

    pub fn get(&self, iso3: &str) -> Option<&CountryRecord> {
        self.records.get(iso3)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records usable for analysis, i.e. everything but the home country.
    pub fn analyzable(&self) -> impl Iterator<Item = &CountryRecord> {
        self.records.values().filter(|r| r.iso3 != self.home)
    }

    /// Map a raw code or aliased name to its canonical ISO-3 code, or
    /// reject it with a reason. Total and deterministic.
    pub fn normalize_country_code(&self, raw: &str) -> Normalized {
        let upper = raw.trim().to_uppercase();
        let code = match self.alias_map.get(&upper) {
            Some(canonical) => canonical.clone(),
            None => upper,
        };
        if code == self.home {
            Normalized::Rejected(RejectReason::Home)
        } else if self.records.contains_key(&code) {
            Normalized::Accepted(code)
        } else if self.excluded.contains(&code) {
            Normalized::Rejected(RejectReason::Excluded)
        } else {
            Normalized::Rejected(RejectReason::Spurious)
        }
    }

    /// Build a reference straight from records; used by tests and synthetic runs.
    pub fn from_records(
        records: Vec<CountryRecord>,
        excluded: impl IntoIterator<Item = String>,
        aliases: BTreeMap<String, String>,
        home: &str,
    ) -> Result<CountryReference, ReferenceError> {
        let mut map = BTreeMap::new();
        for record in records {
            if map.insert(record.iso3.clone(), record.clone()).is_some() {
                return Err(ReferenceError::DuplicateIso3(record.iso3));
            }
        }
        Ok(CountryReference {
            records: map,
            excluded: excluded.into_iter().collect(),
            alias_map: aliases.into_iter().map(|(k, v)| (k.to_uppercase(), v)).collect(),
            home: home.to_uppercase(),
        })
    }
}

/// Declarative adjustments applied to the raw country list.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct AdjustmentConfig {
    #[serde(default)]
    pub additions: Vec<CountryAddition>,
    #[serde(default)]
    pub exclusions: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    /// When set, loading fails unless the final record count matches.
    #[serde(default)]
    pub expected_count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CountryAddition {
    pub iso3: String,
    pub name: String,
    pub subregion: String,
}

impl AdjustmentConfig {
    pub fn from_file(path: &Path) -> Result<AdjustmentConfig, ReferenceError> {
        let text = fs::read_to_string(path)
            .map_err(|_| ReferenceError::MissingFile(path.to_path_buf()))?;
        toml::from_str(&text).map_err(|e| ReferenceError::BadAdjustments(e.to_string()))
    }
}

/// Paths to the per-source indicator files. Any of them may be absent,
/// in which case every record keeps the Unknown/0 default for that source.
#[derive(Debug, Clone, Default)]
pub struct IndicatorPaths {
    pub emdat: Option<PathBuf>,
    pub wbglhm: Option<PathBuf>,
    pub risk: Option<PathBuf>,
    pub development: Option<PathBuf>,
    pub income: Option<PathBuf>,
}

/// One line of the load summary, per source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadSummary {
    pub source: String,
    pub rows_read: usize,
    pub rows_joined: usize,
    pub rows_unknown: usize,
}

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed row in {file} at line {line}")]
    MalformedRow { file: String, line: usize },
    #[error("duplicate iso3 code: {0}")]
    DuplicateIso3(String),
    #[error("bad adjustment file: {0}")]
    BadAdjustments(String),
    #[error("reference has {actual} records, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
}

fn sniff_delimiter(text: &str) -> u8 {
    match text.lines().next() {
        Some(header) if header.contains('\t') => b'\t',
        _ => b',',
    }
}

fn read_delimited(path: &Path, source: &str) -> Result<Vec<(usize, Vec<String>)>, ReferenceError> {
    let text =
        fs::read_to_string(path).map_err(|_| ReferenceError::MissingFile(path.to_path_buf()))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let record = record.map_err(|_| ReferenceError::MalformedRow {
            file: source.to_string(),
            line,
        })?;
        rows.push((line, record.iter().map(|s| s.trim().to_string()).collect()));
    }
    Ok(rows)
}

/// Join one two-column indicator file into the record table.
fn join_indicator<F>(
    path: Option<&Path>,
    source: &str,
    records: &mut BTreeMap<String, CountryRecord>,
    mut apply: F,
    is_unknown: impl Fn(&CountryRecord) -> bool,
) -> Result<LoadSummary, ReferenceError>
where
    F: FnMut(&mut CountryRecord, &str) -> Result<(), ()>,
{
    let mut rows_read = 0;
    let mut rows_joined = 0;
    if let Some(path) = path {
        for (line, fields) in read_delimited(path, source)? {
            if fields.len() < 2 {
                return Err(ReferenceError::MalformedRow {
                    file: source.to_string(),
                    line,
                });
            }
            rows_read += 1;
            let iso3 = fields[0].to_uppercase();
            if let Some(record) = records.get_mut(&iso3) {
                apply(record, &fields[1]).map_err(|_| ReferenceError::MalformedRow {
                    file: source.to_string(),
                    line,
                })?;
                rows_joined += 1;
            }
        }
    }
    let rows_unknown = records.values().filter(|r| is_unknown(r)).count();
    Ok(LoadSummary {
        source: source.to_string(),
        rows_read,
        rows_joined,
        rows_unknown,
    })
}

/// Load the country list, apply adjustments and join the five indicators.
pub fn load_country_reference(
    country_file: &Path,
    indicators: &IndicatorPaths,
    adjustments: &AdjustmentConfig,
    home: &str,
) -> Result<(CountryReference, Vec<LoadSummary>), ReferenceError> {
    let exclusions: BTreeSet<String> =
        adjustments.exclusions.iter().map(|c| c.to_uppercase()).collect();

    let mut records: BTreeMap<String, CountryRecord> = BTreeMap::new();
    let mut excluded_seen: BTreeSet<String> = BTreeSet::new();
    let rows = read_delimited(country_file, "countries")?;
    let rows_read = rows.len();
    for (line, fields) in rows {
        if fields.len() < 3 || fields[0].len() != 3 {
            return Err(ReferenceError::MalformedRow {
                file: "countries".to_string(),
                line,
            });
        }
        let iso3 = fields[0].to_uppercase();
        if !iso3.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(ReferenceError::MalformedRow {
                file: "countries".to_string(),
                line,
            });
        }
        if exclusions.contains(&iso3) {
            excluded_seen.insert(iso3);
            continue;
        }
        let subregion = Subregion::parse(&fields[2]).ok_or(ReferenceError::MalformedRow {
            file: "countries".to_string(),
            line,
        })?;
        let record = CountryRecord {
            iso3: iso3.clone(),
            name: fields[1].clone(),
            subregion,
            development: Development::Unknown,
            income: Income::Unknown,
            risk: Risk::Unknown,
            emdat_count: 0,
            wbglhm_freq: 0.0,
        };
        if records.insert(iso3.clone(), record).is_some() {
            return Err(ReferenceError::DuplicateIso3(iso3));
        }
    }

    for addition in &adjustments.additions {
        let iso3 = addition.iso3.to_uppercase();
        if exclusions.contains(&iso3) || records.contains_key(&iso3) {
            continue;
        }
        let subregion =
            Subregion::parse(&addition.subregion).ok_or(ReferenceError::BadAdjustments(format!(
                "unknown subregion for addition {iso3}"
            )))?;
        records.insert(
            iso3.clone(),
            CountryRecord {
                iso3,
                name: addition.name.clone(),
                subregion,
                development: Development::Unknown,
                income: Income::Unknown,
                risk: Risk::Unknown,
                emdat_count: 0,
                wbglhm_freq: 0.0,
            },
        );
    }

    if let Some(expected) = adjustments.expected_count {
        if records.len() != expected {
            return Err(ReferenceError::SizeMismatch {
                expected,
                actual: records.len(),
            });
        }
    }

    let mut summaries = vec![LoadSummary {
        source: "countries".to_string(),
        rows_read,
        rows_joined: records.len(),
        rows_unknown: 0,
    }];

    summaries.push(join_indicator(
        indicators.emdat.as_deref(),
        "emdat",
        &mut records,
        |r, v| {
            r.emdat_count = v.parse::<u32>().map_err(|_| ())?;
            Ok(())
        },
        |r| r.emdat_count == 0,
    )?);
    summaries.push(join_indicator(
        indicators.wbglhm.as_deref(),
        "wbglhm",
        &mut records,
        |r, v| {
            let f = v.parse::<f64>().map_err(|_| ())?;
            if !f.is_finite() || f < 0.0 {
                return Err(());
            }
            r.wbglhm_freq = f;
            Ok(())
        },
        |r| r.wbglhm_freq == 0.0,
    )?);
    summaries.push(join_indicator(
        indicators.risk.as_deref(),
        "risk",
        &mut records,
        |r, v| {
            r.risk = Risk::parse(v);
            Ok(())
        },
        |r| r.risk == Risk::Unknown,
    )?);
    summaries.push(join_indicator(
        indicators.development.as_deref(),
        "development",
        &mut records,
        |r, v| {
            r.development = Development::parse(v);
            Ok(())
        },
        |r| r.development == Development::Unknown,
    )?);
    summaries.push(join_indicator(
        indicators.income.as_deref(),
        "income",
        &mut records,
        |r, v| {
            r.income = Income::parse(v);
            Ok(())
        },
        |r| r.income == Income::Unknown,
    )?);

    let mut alias_map = BTreeMap::new();
    for (raw, canonical) in &adjustments.aliases {
        alias_map.insert(raw.to_uppercase(), canonical.to_uppercase());
    }

    let reference = CountryReference {
        records,
        excluded: exclusions,
        alias_map,
        home: home.to_uppercase(),
    };
    Ok((reference, summaries))
}
