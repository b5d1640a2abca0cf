//! Chat-completion client for relevance and country extraction.
//!
//! Requests are plain JSON-over-HTTP chat completions at temperature 0.
//! Responses are cached on disk keyed by (doc_id, prompt hash) so replays
//! never hit the endpoint again.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::NewsDocument;
use crate::reference::{CountryReference, Normalized, RejectReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Relevant,
    Unrelated,
}

/// Geolocation outcome for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoResult {
    pub doc_id: String,
    pub countries: Vec<String>,
    pub verdict: Verdict,
    pub raw_response: String,
}

/// Client configuration. `instruction_template` must contain exactly one
/// `{document}` slot.
#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub system_prompt: String,
    pub instruction_template: String,
    pub max_retries: u32,
    pub timeout: Duration,
    pub max_inflight: usize,
    /// Character budget for the document text substituted into the template.
    pub doc_char_budget: usize,
    /// Base delay for exponential backoff between retries.
    pub retry_base: Duration,
    /// Abort the batch once this fraction of documents has failed outright.
    pub abort_failure_fraction: f64,
    pub cache_dir: Option<PathBuf>,
    /// Bearer token sent with each request when set.
    pub api_key: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint_url: "http://localhost:1234/v1".to_string(),
            model_name: "local-model".to_string(),
            system_prompt: String::new(),
            instruction_template: "{document}".to_string(),
            max_retries: 3,
            timeout: Duration::from_secs(60),
            max_inflight: 4,
            doc_char_budget: 8000,
            retry_base: Duration::from_millis(250),
            abort_failure_fraction: 0.25,
            cache_dir: None,
            api_key: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("instruction template must contain exactly one {{document}} slot")]
    TemplateError,
    #[error("endpoint down: {failed} of {total} documents failed after retries")]
    EndpointDown {
        failed: usize,
        total: usize,
        /// Results completed before the abort, order-aligned with the input
        /// prefix of documents that finished.
        partial: Vec<GeoResult>,
    },
    #[error("cache I/O error: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// Per-batch audit tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GeoTally {
    pub spurious: usize,
    pub excluded: usize,
    pub home: usize,
    pub unparseable: usize,
    pub cache_hits: usize,
    pub long_lists: usize,
    /// Documents whose request still failed after retries, below the abort
    /// threshold; they yield an Unrelated result with an empty raw response.
    pub transport_failures: usize,
}

#[derive(Debug)]
pub struct GeolocateOutput {
    pub results: Vec<GeoResult>,
    pub tally: GeoTally,
}

/// Truncate `text` to at most `budget` characters, cutting at the last
/// whitespace boundary before the limit when one exists.
fn truncate_at_whitespace(text: &str, budget: usize) -> String {
    if text.chars().count() <= budget {
        return text.to_string();
    }
    let prefix: String = text.chars().take(budget).collect();
    match prefix.rfind(char::is_whitespace) {
        Some(cut) if cut > 0 => prefix[..cut].to_string(),
        _ => prefix,
    }
}

/// Render the system and user messages for one document.
pub fn build_prompt(
    doc: &NewsDocument,
    cfg: &ClientConfig,
) -> Result<(String, String), ClientError> {
    let slot = "{document}";
    if cfg.instruction_template.matches(slot).count() != 1 {
        return Err(ClientError::TemplateError);
    }
    let text = if doc.title.is_empty() {
        doc.body.clone()
    } else {
        format!("{}\n\n{}", doc.title, doc.body)
    };
    let text = truncate_at_whitespace(&text, cfg.doc_char_budget);
    let user = cfg.instruction_template.replace(slot, &text);
    Ok((cfg.system_prompt.clone(), user))
}

/// Outcome of parsing one raw model response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub countries: Vec<String>,
    pub verdict: Verdict,
    pub tally: GeoTally,
}

fn is_na(s: &str) -> bool {
    s.trim().eq_ignore_ascii_case("n/a")
}

/// Pull the candidate code list out of the first JSON value in the text.
/// Returns None when no usable JSON value is present.
fn json_candidates(text: &str) -> Option<Vec<String>> {
    let start = text.find(['[', '{'])?;
    let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    let value = stream.next()?.ok()?;
    let list = match value {
        Value::Array(items) => items,
        Value::Object(map) if map.len() == 1 => match map.into_iter().next().unwrap().1 {
            Value::Array(items) => items,
            Value::String(s) if is_na(&s) => Vec::new(),
            _ => return None,
        },
        _ => return None,
    };
    let mut codes = Vec::new();
    for item in list {
        if let Value::String(s) = item {
            codes.push(s);
        }
    }
    Some(codes)
}

/// Parse arbitrary model output into countries and a verdict.
/// Unparseable output is treated as Unrelated but tallied.
pub fn extract_countries(response_text: &str, reference: &CountryReference) -> Extraction {
    let mut tally = GeoTally::default();
    let candidates = match json_candidates(response_text) {
        Some(codes) => codes,
        None => {
            if !is_na_anywhere(response_text) {
                tally.unparseable = 1;
            }
            return Extraction {
                countries: Vec::new(),
                verdict: Verdict::Unrelated,
                tally,
            };
        }
    };
    let mut countries = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for raw in candidates {
        if is_na(&raw) {
            continue;
        }
        match reference.normalize_country_code(&raw) {
            Normalized::Accepted(code) => {
                if seen.insert(code.clone()) {
                    countries.push(code);
                }
            }
            Normalized::Rejected(RejectReason::Spurious) => tally.spurious += 1,
            Normalized::Rejected(RejectReason::Excluded) => tally.excluded += 1,
            Normalized::Rejected(RejectReason::Home) => tally.home += 1,
        }
    }
    if countries.len() > 3 {
        tally.long_lists = 1;
    }
    let verdict = if countries.is_empty() {
        Verdict::Unrelated
    } else {
        Verdict::Relevant
    };
    Extraction {
        countries,
        verdict,
        tally,
    }
}

fn is_na_anywhere(text: &str) -> bool {
    text.to_ascii_lowercase().contains("n/a")
}

fn cache_key(doc_id: &str, system: &str, user: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(doc_id.as_bytes());
    hasher.update([0]);
    hasher.update(system.as_bytes());
    hasher.update([0]);
    hasher.update(user.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    // content-addressed: shard by the first two hex chars
    dir.join(&key[..2]).join(format!("{key}.txt"))
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

fn post_completion(
    client: &reqwest::blocking::Client,
    cfg: &ClientConfig,
    system: &str,
    user: &str,
) -> Result<String, String> {
    let url = format!("{}/chat/completions", cfg.endpoint_url.trim_end_matches('/'));
    let request = ChatRequest {
        model: &cfg.model_name,
        messages: vec![
            ChatMessage {
                role: "system",
                content: system,
            },
            ChatMessage {
                role: "user",
                content: user,
            },
        ],
        temperature: 0.0,
    };
    let mut builder = client.post(&url).json(&request);
    if let Some(key) = &cfg.api_key {
        builder = builder.bearer_auth(key);
    }
    let response = builder.send().map_err(|e| e.to_string())?;
    if !response.status().is_success() {
        return Err(format!("status {}", response.status()));
    }
    let body: Value = response.json().map_err(|e| e.to_string())?;
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(|s| s.to_string())
        .ok_or_else(|| "response missing choices[0].message.content".to_string())
}

/// Fetch the raw response for one prompt, via cache when enabled.
fn fetch_response(
    client: &reqwest::blocking::Client,
    cfg: &ClientConfig,
    doc_id: &str,
    system: &str,
    user: &str,
    cache_hit: &mut bool,
) -> Result<String, String> {
    let cache_file = cfg
        .cache_dir
        .as_ref()
        .map(|dir| cache_path(dir, &cache_key(doc_id, system, user)));
    if let Some(path) = &cache_file {
        if let Ok(cached) = fs::read_to_string(path) {
            *cache_hit = true;
            return Ok(cached);
        }
    }
    let mut last_err = String::new();
    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            std::thread::sleep(cfg.retry_base * 2u32.saturating_pow(attempt - 1));
        }
        match post_completion(client, cfg, system, user) {
            Ok(content) => {
                if let Some(path) = &cache_file {
                    if let Some(parent) = path.parent() {
                        let _ = fs::create_dir_all(parent);
                    }
                    let _ = fs::write(path, &content);
                }
                return Ok(content);
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Geolocate a document batch with at most `max_inflight` outstanding
/// requests. Results are order-aligned with the input and deterministic
/// given deterministic endpoint responses.
pub fn geolocate_corpus(
    docs: &[NewsDocument],
    cfg: &ClientConfig,
    reference: &CountryReference,
) -> Result<GeolocateOutput, ClientError> {
    // Validate the template up front so a bad config fails fast.
    if cfg.instruction_template.matches("{document}").count() != 1 {
        return Err(ClientError::TemplateError);
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(cfg.timeout)
        .build()
        .expect("client construction cannot fail with static options");

    let slots: Mutex<Vec<Option<GeoResult>>> = Mutex::new(vec![None; docs.len()]);
    let tally = Mutex::new(GeoTally::default());
    let next = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    let abort_threshold = ((cfg.abort_failure_fraction * docs.len() as f64).ceil() as usize).max(1);

    let workers = cfg.max_inflight.max(1).min(docs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= docs.len() || failed.load(Ordering::SeqCst) >= abort_threshold {
                    break;
                }
                let doc = &docs[index];
                let (system, user) = match build_prompt(doc, cfg) {
                    Ok(p) => p,
                    Err(_) => break,
                };
                let mut cache_hit = false;
                match fetch_response(&client, cfg, &doc.doc_id, &system, &user, &mut cache_hit) {
                    Ok(raw) => {
                        let extraction = extract_countries(&raw, reference);
                        let mut t = tally.lock().unwrap();
                        t.spurious += extraction.tally.spurious;
                        t.excluded += extraction.tally.excluded;
                        t.home += extraction.tally.home;
                        t.unparseable += extraction.tally.unparseable;
                        t.long_lists += extraction.tally.long_lists;
                        if cache_hit {
                            t.cache_hits += 1;
                        }
                        drop(t);
                        slots.lock().unwrap()[index] = Some(GeoResult {
                            doc_id: doc.doc_id.clone(),
                            countries: extraction.countries,
                            verdict: extraction.verdict,
                            raw_response: raw,
                        });
                    }
                    Err(_) => {
                        failed.fetch_add(1, Ordering::SeqCst);
                    }
                }
            });
        }
    });

    let slots = slots.into_inner().unwrap();
    let failed = failed.into_inner();
    let mut tally = tally.into_inner().unwrap();
    if failed >= abort_threshold {
        let partial: Vec<GeoResult> = slots.into_iter().flatten().collect();
        return Err(ClientError::EndpointDown {
            failed,
            total: docs.len(),
            partial,
        });
    }
    let results: Vec<GeoResult> = slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.unwrap_or_else(|| {
                tally.transport_failures += 1;
                GeoResult {
                    doc_id: docs[i].doc_id.clone(),
                    countries: Vec::new(),
                    verdict: Verdict::Unrelated,
                    raw_response: String::new(),
                }
            })
        })
        .collect();
    Ok(GeolocateOutput { results, tally })
}
