//! Run configuration: a sectioned key-value file with CLI overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geolocate::ClientConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CohortMode {
    /// Every analyzable reference country.
    All,
    /// Countries with news events or a positive external measure (default).
    NonzeroAny,
    /// Countries with news events and a positive external measure.
    NonzeroBoth,
}

impl CohortMode {
    pub fn label(self) -> &'static str {
        match self {
            CohortMode::All => "all",
            CohortMode::NonzeroAny => "nonzero-any",
            CohortMode::NonzeroBoth => "nonzero-both",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        PeriodConfig {
            start: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PathsConfig {
    /// Line-delimited JSON input documents.
    pub documents: Option<PathBuf>,
    /// Gold/annotation file {doc_id, relevant, countries}; doubles as the
    /// country source when no endpoint is configured.
    pub annotations: Option<PathBuf>,
    pub country_file: Option<PathBuf>,
    pub adjustments: Option<PathBuf>,
    pub emdat: Option<PathBuf>,
    pub wbglhm: Option<PathBuf>,
    pub risk: Option<PathBuf>,
    pub development: Option<PathBuf>,
    pub income: Option<PathBuf>,
    /// Optional dated EM-DAT records {iso3, year, count} for per-year
    /// external proportions.
    pub emdat_dated: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientSection {
    pub endpoint: Option<String>,
    pub model: String,
    pub system_prompt_file: Option<PathBuf>,
    pub instruction_file: Option<PathBuf>,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub max_inflight: usize,
    pub doc_char_budget: usize,
    pub retry_base_ms: u64,
    pub abort_failure_fraction: f64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ClientSection {
    fn default() -> Self {
        ClientSection {
            endpoint: None,
            model: "local-model".to_string(),
            system_prompt_file: None,
            instruction_file: None,
            max_retries: 3,
            timeout_secs: 60,
            max_inflight: 4,
            doc_char_budget: 8000,
            retry_base_ms: 250,
            abort_failure_fraction: 0.25,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub home_country: String,
    pub max_gap: usize,
    pub band_fraction: f64,
    pub cohort_mode: CohortMode,
    /// Apply the keyword pre-filter during ingest.
    pub keyword_filter: bool,
    /// Extra keywords replacing the default list when non-empty.
    pub keywords: Vec<String>,
    /// Worker threads for per-country stages; 0 picks the rayon default.
    pub threads: usize,
    /// Flag documents whose body exceeds this many characters as possible
    /// concatenations of several pieces; 0 disables the check.
    pub long_body_threshold: usize,
    pub period: PeriodConfig,
    pub paths: PathsConfig,
    pub client: ClientSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            home_country: "DEU".to_string(),
            max_gap: 4,
            band_fraction: 0.25,
            cohort_mode: CohortMode::NonzeroAny,
            keyword_filter: true,
            keywords: Vec::new(),
            threads: 0,
            long_body_threshold: 0,
            period: PeriodConfig::default(),
            paths: PathsConfig::default(),
            client: ClientSection::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}")]
    Unreadable(PathBuf),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| ConfigError::Unreadable(path.to_path_buf()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Make all paths absolute relative to `base` so the resolved config
    /// embedded in the manifest reproduces the run from anywhere.
    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&path);
                }
            }
        };
        resolve(&mut self.paths.documents);
        resolve(&mut self.paths.annotations);
        resolve(&mut self.paths.country_file);
        resolve(&mut self.paths.adjustments);
        resolve(&mut self.paths.emdat);
        resolve(&mut self.paths.wbglhm);
        resolve(&mut self.paths.risk);
        resolve(&mut self.paths.development);
        resolve(&mut self.paths.income);
        resolve(&mut self.paths.emdat_dated);
        resolve(&mut self.paths.out_dir);
        resolve(&mut self.client.system_prompt_file);
        resolve(&mut self.client.instruction_file);
        resolve(&mut self.client.cache_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.period.start > self.period.end {
            return Err(ConfigError::Invalid(
                "period start is after period end".to_string(),
            ));
        }
        if !(0.0 < self.band_fraction && self.band_fraction < 1.0) {
            return Err(ConfigError::Invalid(
                "band_fraction must lie in (0, 1)".to_string(),
            ));
        }
        if self.home_country.len() != 3 {
            return Err(ConfigError::Invalid(
                "home_country must be a 3-letter code".to_string(),
            ));
        }
        Ok(())
    }

    pub fn period(&self) -> (NaiveDate, NaiveDate) {
        (self.period.start, self.period.end)
    }

    /// Build the geolocation client config, reading prompt files and
    /// honoring environment overrides for endpoint and credentials.
    pub fn client_config(&self) -> Result<Option<ClientConfig>, ConfigError> {
        let endpoint = std::env::var("NEWSLIDE_ENDPOINT")
            .ok()
            .or_else(|| self.client.endpoint.clone());
        let Some(endpoint_url) = endpoint else {
            return Ok(None);
        };
        let read = |p: &Option<PathBuf>| -> Result<Option<String>, ConfigError> {
            match p {
                Some(path) => std::fs::read_to_string(path)
                    .map(Some)
                    .map_err(|_| ConfigError::Unreadable(path.clone())),
                None => Ok(None),
            }
        };
        Ok(Some(ClientConfig {
            endpoint_url,
            model_name: self.client.model.clone(),
            system_prompt: read(&self.client.system_prompt_file)?.unwrap_or_default(),
            instruction_template: read(&self.client.instruction_file)?
                .unwrap_or_else(|| "{document}".to_string()),
            max_retries: self.client.max_retries,
            timeout: Duration::from_secs(self.client.timeout_secs),
            max_inflight: self.client.max_inflight.max(1),
            doc_char_budget: self.client.doc_char_budget,
            retry_base: Duration::from_millis(self.client.retry_base_ms),
            abort_failure_fraction: self.client.abort_failure_fraction,
            cache_dir: self.client.cache_dir.clone(),
            api_key: std::env::var("NEWSLIDE_API_KEY").ok(),
        }))
    }

    pub fn effective_keywords(&self) -> Vec<String> {
        if self.keywords.is_empty() {
            crate::corpus::default_keywords()
        } else {
            self.keywords.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_study_constants() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.home_country, "DEU");
        assert_eq!(cfg.max_gap, 4);
        assert_eq!(cfg.band_fraction, 0.25);
        assert_eq!(cfg.period.start, NaiveDate::from_ymd_opt(2000, 1, 1).unwrap());
        assert_eq!(cfg.period.end, NaiveDate::from_ymd_opt(2024, 12, 31).unwrap());
    }

    #[test]
    fn bad_period_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.period.end = NaiveDate::from_ymd_opt(1999, 1, 1).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_band_fraction_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.band_fraction = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.max_gap, cfg.max_gap);
        assert_eq!(back.cohort_mode, cfg.cohort_mode);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[paths]\ndocuments = \"docs.jsonl\"\n").unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.paths.documents.unwrap(), dir.path().join("docs.jsonl"));
    }
}
