//! Acceptance suite: one test per release criterion. Each test prints a
//! single pass line so the run log doubles as a checklist.

mod support;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use newslide::corpus::NewsDocument;
use newslide::events::{self, CountSeries, EventSpan};
use newslide::evaluate::{prf_from_counts, ConfusionCounts};
use newslide::geolocate::{geolocate_corpus, ClientConfig, Verdict};
use newslide::reference::{
    CountryRecord, CountryReference, Development, Income, Risk, Subregion,
};
use newslide::salience::{
    self, categorize, divergence, fit_regression, salience_scores, Category,
};
use support::{MockReply, MockServer};

fn pass(name: &str) {
    println!("acceptance: {name} ... pass");
}

/// Independent segmentation oracle: split sorted active days wherever the
/// run of interior zero days is strictly longer than max_gap.
fn oracle_segment(counts: &[u32], max_gap: usize) -> Vec<EventSpan> {
    let active: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter_map(|(i, &c)| (c > 0).then_some(i))
        .collect();
    let mut spans = Vec::new();
    let mut start = match active.first() {
        Some(&first) => first,
        None => return spans,
    };
    for pair in active.windows(2) {
        let zeros_between = pair[1] - pair[0] - 1;
        if zeros_between > max_gap {
            spans.push(EventSpan { first: start, last: pair[0] });
            start = pair[1];
        }
    }
    spans.push(EventSpan { first: start, last: *active.last().unwrap() });
    spans
}

fn random_series(rng: &mut ChaCha8Rng, len: usize) -> CountSeries {
    let density: f64 = rng.gen_range(0.01..0.4);
    let counts = (0..len)
        .map(|_| {
            if rng.gen_bool(density) {
                rng.gen_range(1..6)
            } else {
                0
            }
        })
        .collect();
    CountSeries {
        iso3: "XXX".to_string(),
        period_start: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
        period_end: NaiveDate::from_ymd_opt(2000, 12, 31).unwrap(),
        counts,
    }
}

#[test]
fn segmentation_matches_oracle_on_10k_series() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let len = rng.gen_range(30..400);
        let series = random_series(&mut rng, len);
        let max_gap = rng.gen_range(0..8);
        assert_eq!(
            events::segment(&series, max_gap),
            oracle_segment(&series.counts, max_gap)
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    pass("segmentation oracle, 10k random series under 10s");
}

#[test]
fn volume_is_conserved_and_default_period_has_9132_days() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let series = random_series(&mut rng, 365);
        let spans = events::segment(&series, rng.gen_range(0..6));
        let span_total: u64 = spans
            .iter()
            .map(|s| series.counts[s.first..=s.last].iter().map(|&c| u64::from(c)).sum::<u64>())
            .sum();
        assert_eq!(span_total, series.total());
    }
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2024, 12, 31).unwrap();
    assert_eq!(events::period_days(start, end), 9132);
    pass("volume conservation and 9132-day default period");
}

#[test]
fn salience_anchors_zero_half_one() {
    let values: BTreeMap<String, f64> =
        [("A", 0.0), ("B", 9.0), ("C", 99.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
    let scores = salience_scores(&values).unwrap().scores;
    assert!((scores["A"] - 0.0).abs() < 1e-12);
    assert!((scores["B"] - 0.5).abs() < 1e-12);
    assert!((scores["C"] - 1.0).abs() < 1e-12);
    pass("salience maps {0, 9, 99} to {0, 0.5, 1} within 1e-12");
}

#[test]
fn regression_residual_identities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let n = rng.gen_range(3..400);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let fit = match fit_regression(&pairs) {
            Ok(fit) => fit,
            Err(_) => continue,
        };
        let residuals: Vec<f64> = pairs.iter().map(|&(x, y)| y - fit.predict(x)).collect();
        let tol = 1e-9 * n as f64;
        let sum: f64 = residuals.iter().sum();
        let dot: f64 = pairs
            .iter()
            .zip(&residuals)
            .map(|(&(x, _), &r)| x * r)
            .sum();
        assert!(sum.abs() <= tol, "residual sum {sum}");
        assert!(dot.abs() <= tol, "residual-x dot {dot}");
    }
    pass("regression residuals sum to zero and are orthogonal to x (1e-9 per point)");
}

#[test]
fn divergence_bands_categorize_canonical_values() {
    let fit = salience::RegressionFit { beta0: 0.0, beta1: 0.0, n: 3 };
    let pairs: BTreeMap<String, (f64, f64)> = [
        ("U".to_string(), (0.0, -1.0)),
        ("S".to_string(), (0.0, 0.1)),
        ("O".to_string(), (0.0, 0.9)),
    ]
    .into_iter()
    .collect();
    let mut records = divergence(&fit, &pairs);
    categorize(&mut records, 0.25);
    let by_iso: BTreeMap<&str, Category> =
        records.iter().map(|r| (r.iso3.as_str(), r.category)).collect();
    assert_eq!(by_iso["U"], Category::Underreported);
    assert_eq!(by_iso["S"], Category::Similar);
    assert_eq!(by_iso["O"], Category::Overreported);
    pass("divergences {-1.0, 0.1, 0.9} categorize as under/similar/over");
}

#[test]
fn evaluation_counts_reproduce_reported_scores() {
    let (p, r, f1) = prf_from_counts(ConfusionCounts { tp: 250, fp: 57, fn_: 14, tn: 0 });
    assert!((p - 0.814).abs() <= 0.0015, "precision {p}");
    assert!((r - 0.947).abs() <= 0.0015, "recall {r}");
    assert!((f1 - 0.875).abs() <= 0.0015, "f1 {f1}");
    pass("tp=250 fp=57 fn=14 reproduces P/R/F1 0.814/0.947/0.875");
}

#[test]
fn client_respects_inflight_limit_and_cache_replays_identically() {
    let start = Instant::now();
    let attempts: Mutex<HashMap<String, usize>> = Mutex::new(HashMap::new());
    let server = MockServer::start(Arc::new(move |_, user: &str| {
        if user.contains("FLAKY") {
            let mut attempts = attempts.lock().unwrap();
            let n = attempts.entry(user.to_string()).or_insert(0);
            *n += 1;
            if *n == 1 {
                return MockReply::Status(500);
            }
        }
        if user.contains("ITALIEN") {
            MockReply::Content("[\"ITA\"]".to_string())
        } else {
            MockReply::Content("N/A".to_string())
        }
    }));

    let make = |iso3: &str| CountryRecord {
        iso3: iso3.to_string(),
        name: iso3.to_string(),
        subregion: Subregion::SouthernEurope,
        development: Development::Unknown,
        income: Income::Unknown,
        risk: Risk::Unknown,
        emdat_count: 0,
        wbglhm_freq: 0.0,
    };
    let reference = CountryReference::from_records(
        vec![make("ITA"), make("DEU")],
        [],
        BTreeMap::new(),
        "DEU",
    )
    .unwrap();

    let docs: Vec<NewsDocument> = (0..30)
        .map(|i| NewsDocument {
            doc_id: format!("doc{i:02}"),
            date: NaiveDate::from_ymd_opt(2012, 3, 4).unwrap(),
            outlet: "FAZ".to_string(),
            title: "Erdrutsch".to_string(),
            body: match i % 3 {
                0 => "Erdrutsch in ITALIEN".to_string(),
                1 => "Kein Ortsbezug".to_string(),
                _ => "FLAKY Erdrutsch in ITALIEN".to_string(),
            },
            text_hash: 0,
            text_type: None,
        })
        .collect();

    let cache = tempfile::tempdir().unwrap();
    let cfg = ClientConfig {
        endpoint_url: server.url.clone(),
        model_name: "mock".to_string(),
        system_prompt: "s".to_string(),
        instruction_template: "{document}".to_string(),
        max_retries: 2,
        timeout: Duration::from_secs(5),
        max_inflight: 4,
        doc_char_budget: 4000,
        retry_base: Duration::from_millis(2),
        abort_failure_fraction: 0.5,
        cache_dir: Some(cache.path().to_path_buf()),
        api_key: None,
    };

    let first = geolocate_corpus(&docs, &cfg, &reference).unwrap();
    assert_eq!(first.results.len(), docs.len());
    for (i, result) in first.results.iter().enumerate() {
        match i % 3 {
            1 => assert_eq!(result.verdict, Verdict::Unrelated),
            _ => assert_eq!(result.countries, ["ITA"]),
        }
    }
    let seen = server.max_inflight_seen.load(std::sync::atomic::Ordering::SeqCst);
    assert!(seen <= cfg.max_inflight, "observed {seen} concurrent requests");
    let requests_after_first = server.requests.load(std::sync::atomic::Ordering::SeqCst);

    let replay = geolocate_corpus(&docs, &cfg, &reference).unwrap();
    assert_eq!(
        server.requests.load(std::sync::atomic::Ordering::SeqCst),
        requests_after_first,
        "cache replay must not touch the endpoint"
    );
    assert_eq!(replay.tally.cache_hits, docs.len());
    assert_eq!(
        serde_json::to_vec(&first.results).unwrap(),
        serde_json::to_vec(&replay.results).unwrap(),
        "cached replay must be byte-identical"
    );

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass("bounded-concurrency client with byte-identical cache replay under 5s");
}

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/config.toml")
}

#[test]
fn end_to_end_fixture_run_is_deterministic() {
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let config = fixture_config();
    let run = || {
        let output = Command::new(env!("CARGO_BIN_EXE_newslide"))
            .args([
                "all",
                "--config",
                config.to_str().unwrap(),
                "--out-dir",
                out.path().to_str().unwrap(),
            ])
            .output()
            .expect("spawn cli");
        assert!(
            output.status.success(),
            "pipeline failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };

    run();
    let mut snapshot: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for entry in std::fs::read_dir(out.path()).unwrap() {
        let entry = entry.unwrap();
        snapshot.insert(
            entry.file_name().into_string().unwrap(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    assert!(snapshot.contains_key("summary.json"));

    run();
    for (name, before) in &snapshot {
        let after = std::fs::read(out.path().join(name)).unwrap();
        assert_eq!(&after, before, "artifact {name} changed between runs");
    }

    // counts pinned by the independent fixture generator
    let expected: serde_json::Value = serde_json::from_slice(
        &std::fs::read(config.parent().unwrap().join("expected_counts.json")).unwrap(),
    )
    .unwrap();
    let events_rows = String::from_utf8(snapshot["events.csv"].clone())
        .unwrap()
        .lines()
        .count()
        - 1;
    let instance_rows = String::from_utf8(snapshot["instances.csv"].clone())
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(events_rows as u64, expected["events"].as_u64().unwrap());
    assert_eq!(instance_rows as u64, expected["instances"].as_u64().unwrap());

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass("end-to-end fixture run is byte-deterministic under 30s");
}

#[test]
fn throughput_100k_instances_across_244_countries() {
    let reference = newslide::reference::load_country_reference(
        &Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/unsd_countries.csv"),
        &newslide::reference::IndicatorPaths::default(),
        &newslide::reference::AdjustmentConfig::from_file(
            &Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/adjustments.toml"),
        )
        .unwrap(),
        "DEU",
    )
    .unwrap()
    .0;
    let codes: Vec<String> = reference.records().keys().cloned().collect();
    assert_eq!(codes.len(), 244);

    let period = (
        NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let instances: Vec<newslide::corpus::DataInstance> = (0..100_000)
        .map(|i| {
            let iso3 = codes[rng.gen_range(0..codes.len())].clone();
            let day = rng.gen_range(0..9132u64);
            newslide::corpus::DataInstance {
                doc_id: format!("doc{i}"),
                date: period.0 + chrono::Days::new(day),
                outlet: format!("outlet{}", i % 7),
                text_hash: i as u64,
                iso3,
                text_type: Some(format!("type{}", i % 4)),
            }
        })
        .collect();

    let start = Instant::now();
    let series = events::build_series(&instances, period).unwrap();
    let mut per_country: BTreeMap<&str, Vec<newslide::corpus::DataInstance>> = BTreeMap::new();
    for instance in &instances {
        per_country
            .entry(instance.iso3.as_str())
            .or_default()
            .push(instance.clone());
    }
    let mut n_events = 0usize;
    let mut volume = 0u64;
    for (iso3, series) in &series {
        let owned = per_country.remove(iso3.as_str()).unwrap_or_default();
        let events = events::events_for_series(series, &owned, 4);
        n_events += events.len();
        volume += events.iter().map(|e| u64::from(e.measures.total_volume)).sum::<u64>();
    }
    let elapsed = start.elapsed();

    assert_eq!(volume, 100_000);
    assert!(n_events > 0);
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass("100k instances across 244 countries segment under 5s");
}
