//! Per-country daily count series and their segmentation into news events.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DataInstance;

/// Daily article counts for one country over the study period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    pub iso3: String,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub counts: Vec<u32>,
}

impl CountSeries {
    pub fn day(&self, index: usize) -> NaiveDate {
        self.period_start + chrono::Days::new(index as u64)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Number of days in a closed period.
pub fn period_days(start: NaiveDate, end: NaiveDate) -> usize {
    (end - start).num_days() as usize + 1
}

/// A contiguous attention cluster, as day indices into a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventSpan {
    pub first: usize,
    pub last: usize,
}

/// A news event with its dates and measure vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsEvent {
    pub iso3: String,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub peak_day: NaiveDate,
    pub measures: EventMeasures,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMeasures {
    pub n_at_peak: u32,
    pub total_volume: u32,
    pub duration_days: u32,
    pub days_since_last: Option<i64>,
    pub days_to_peak: u32,
    pub days_to_fade: u32,
    pub n_text_types: u32,
    pub n_outlets: u32,
}

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("instance for {iso3} dated {date} lies outside the study period")]
    OutOfPeriodInstance { iso3: String, date: NaiveDate },
}

/// Build one count series per country with at least one instance.
pub fn build_series(
    instances: &[DataInstance],
    period: (NaiveDate, NaiveDate),
) -> Result<BTreeMap<String, CountSeries>, EventsError> {
    let (start, end) = period;
    let days = period_days(start, end);
    let mut series: BTreeMap<String, CountSeries> = BTreeMap::new();
    for instance in instances {
        if instance.date < start || instance.date > end {
            return Err(EventsError::OutOfPeriodInstance {
                iso3: instance.iso3.clone(),
                date: instance.date,
            });
        }
        let entry = series.entry(instance.iso3.clone()).or_insert_with(|| CountSeries {
            iso3: instance.iso3.clone(),
            period_start: start,
            period_end: end,
            counts: vec![0; days],
        });
        let index = (instance.date - start).num_days() as usize;
        entry.counts[index] += 1;
    }
    Ok(series)
}

/// Segment a series into maximal clusters of active days where interior
/// inactive runs are at most `max_gap` days long. A run of `max_gap + 1`
/// or more zeros splits events.
pub fn segment(series: &CountSeries, max_gap: usize) -> Vec<EventSpan> {
    let mut spans: Vec<EventSpan> = Vec::new();
    let mut current: Option<EventSpan> = None;
    for (i, &count) in series.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        match current {
            Some(ref mut span) if i - span.last <= max_gap + 1 => span.last = i,
            _ => {
                if let Some(span) = current.take() {
                    spans.push(span);
                }
                current = Some(EventSpan { first: i, last: i });
            }
        }
    }
    if let Some(span) = current {
        spans.push(span);
    }
    spans
}

/// Compute the measure vector for one segmented span.
pub fn event_measures(
    span: EventSpan,
    series: &CountSeries,
    instances: &[DataInstance],
    previous: Option<EventSpan>,
) -> EventMeasures {
    let window = &series.counts[span.first..=span.last];
    let n_at_peak = *window.iter().max().expect("span is non-empty");
    // Ties break to the earliest day.
    let peak_offset = window.iter().position(|&c| c == n_at_peak).unwrap();
    let total_volume: u32 = window.iter().sum();
    let duration_days = (span.last - span.first + 1) as u32;

    let first_day = series.day(span.first);
    let last_day = series.day(span.last);
    let mut text_types: BTreeSet<&str> = BTreeSet::new();
    let mut outlets: BTreeSet<&str> = BTreeSet::new();
    for instance in instances {
        if instance.iso3 == series.iso3 && instance.date >= first_day && instance.date <= last_day {
            if let Some(t) = &instance.text_type {
                text_types.insert(t.as_str());
            }
            outlets.insert(instance.outlet.as_str());
        }
    }

    EventMeasures {
        n_at_peak,
        total_volume,
        duration_days,
        days_since_last: previous.map(|p| (span.first - p.last) as i64),
        days_to_peak: peak_offset as u32,
        days_to_fade: (span.last - span.first - peak_offset) as u32,
        n_text_types: text_types.len() as u32,
        n_outlets: outlets.len() as u32,
    }
}

/// Segment a series and attach measures, in first-day order.
pub fn events_for_series(
    series: &CountSeries,
    instances: &[DataInstance],
    max_gap: usize,
) -> Vec<NewsEvent> {
    let spans = segment(series, max_gap);
    let mut events = Vec::with_capacity(spans.len());
    let mut previous: Option<EventSpan> = None;
    for span in spans {
        let measures = event_measures(span, series, instances, previous);
        let window = &series.counts[span.first..=span.last];
        let peak_offset = window
            .iter()
            .position(|&c| c == measures.n_at_peak)
            .unwrap();
        events.push(NewsEvent {
            iso3: series.iso3.clone(),
            first_day: series.day(span.first),
            last_day: series.day(span.last),
            peak_day: series.day(span.first + peak_offset),
            measures,
        });
        previous = Some(span);
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(counts: Vec<u32>) -> CountSeries {
        CountSeries {
            iso3: "ITA".to_string(),
            period_start: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            period_end: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
                + chrono::Days::new(counts.len() as u64 - 1),
            counts,
        }
    }

    /// Independent reference: split the active-day list wherever the gap
    /// between consecutive active days exceeds max_gap + 1.
    fn brute_force_segment(counts: &[u32], max_gap: usize) -> Vec<EventSpan> {
        let active: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        let mut spans = Vec::new();
        let mut start = match active.first() {
            Some(&s) => s,
            None => return spans,
        };
        for pair in active.windows(2) {
            let zeros_between = pair[1] - pair[0] - 1;
            if zeros_between >= max_gap + 1 {
                spans.push(EventSpan {
                    first: start,
                    last: pair[0],
                });
                start = pair[1];
            }
        }
        spans.push(EventSpan {
            first: start,
            last: *active.last().unwrap(),
        });
        spans
    }

    #[test]
    fn default_period_has_9132_days() {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2024, 12, 31).unwrap();
        assert_eq!(period_days(start, end), 9132);
    }

    #[test]
    fn build_series_counts_instances_per_day() {
        let date = NaiveDate::from_ymd_opt(2020, 1, 5).unwrap();
        let instance = |iso3: &str, date: NaiveDate| DataInstance {
            doc_id: "d".to_string(),
            date,
            outlet: "o".to_string(),
            text_hash: 0,
            iso3: iso3.to_string(),
            text_type: None,
        };
        let period = (
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 1, 31).unwrap(),
        );
        let instances = vec![
            instance("PER", date),
            instance("PER", date),
            instance("PER", date),
        ];
        let map = build_series(&instances, period).unwrap();
        let s = &map["PER"];
        assert_eq!(s.counts[4], 3);
        assert_eq!(s.total(), 3);
        assert_eq!(s.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn build_series_day_index_over_full_period() {
        let period = (
            NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
        );
        let instance = |date: NaiveDate| DataInstance {
            doc_id: "d".to_string(),
            date,
            outlet: "o".to_string(),
            text_hash: 0,
            iso3: "ITA".to_string(),
            text_type: None,
        };
        let instances = vec![instance(period.0), instance(period.1)];
        let map = build_series(&instances, period).unwrap();
        let s = &map["ITA"];
        assert_eq!(s.counts.len(), 9132);
        assert_eq!(s.counts[0], 1);
        assert_eq!(s.counts[9131], 1);
    }

    #[test]
    fn build_series_empty_input_gives_empty_map() {
        let period = (
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 1, 31).unwrap(),
        );
        assert!(build_series(&[], period).unwrap().is_empty());
    }

    #[test]
    fn build_series_rejects_out_of_period() {
        let period = (
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 1, 31).unwrap(),
        );
        let instances = vec![DataInstance {
            doc_id: "d".to_string(),
            date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            outlet: "o".to_string(),
            text_hash: 0,
            iso3: "ITA".to_string(),
            text_type: None,
        }];
        assert!(build_series(&instances, period).is_err());
    }

    #[test]
    fn gap_of_four_zeros_bridges() {
        // active days d, d+1, d+6 with 4 zeros between d+1 and d+6
        let s = series(vec![1, 1, 0, 0, 0, 0, 2]);
        let spans = segment(&s, 4);
        assert_eq!(spans, vec![EventSpan { first: 0, last: 6 }]);
    }

    #[test]
    fn gap_of_five_zeros_splits() {
        let s = series(vec![1, 0, 0, 0, 0, 0, 2]);
        let spans = segment(&s, 4);
        assert_eq!(
            spans,
            vec![
                EventSpan { first: 0, last: 0 },
                EventSpan { first: 6, last: 6 }
            ]
        );
    }

    #[test]
    fn all_zero_series_has_no_events() {
        let s = series(vec![0, 0, 0, 0]);
        assert!(segment(&s, 4).is_empty());
    }

    #[test]
    fn split_threshold_is_exactly_max_gap_plus_one() {
        for max_gap in 0..=6usize {
            for zeros in 1..=10usize {
                let mut counts = vec![1];
                counts.extend(std::iter::repeat(0).take(zeros));
                counts.push(1);
                let s = series(counts);
                let n = segment(&s, max_gap).len();
                if zeros >= max_gap + 1 {
                    assert_eq!(n, 2, "max_gap={max_gap} zeros={zeros}");
                } else {
                    assert_eq!(n, 1, "max_gap={max_gap} zeros={zeros}");
                }
            }
        }
    }

    #[test]
    fn single_day_event_measures() {
        let s = series(vec![0, 2, 0]);
        let spans = segment(&s, 4);
        let m = event_measures(spans[0], &s, &[], None);
        assert_eq!(m.total_volume, 2);
        assert_eq!(m.duration_days, 1);
        assert_eq!(m.days_to_peak, 0);
        assert_eq!(m.days_to_fade, 0);
        assert_eq!(m.days_since_last, None);
    }

    #[test]
    fn bridged_event_measures() {
        // counts [1,0,0,3,1] across days d..d+4, one event
        let s = series(vec![1, 0, 0, 3, 1]);
        let spans = segment(&s, 4);
        assert_eq!(spans.len(), 1);
        let m = event_measures(spans[0], &s, &[], None);
        assert_eq!(m.total_volume, 5);
        assert_eq!(m.duration_days, 5);
        assert_eq!(m.n_at_peak, 3);
        assert_eq!(m.days_to_peak, 3);
        assert_eq!(m.days_to_fade, 1);
    }

    #[test]
    fn days_since_last_between_events() {
        // events ending at index 10 and starting at index 17
        let mut counts = vec![0u32; 20];
        counts[8] = 1;
        counts[10] = 1;
        counts[17] = 1;
        let s = series(counts);
        let spans = segment(&s, 4);
        assert_eq!(spans.len(), 2);
        let m = event_measures(spans[1], &s, &[], Some(spans[0]));
        assert_eq!(m.days_since_last, Some(7));
    }

    #[test]
    fn peak_ties_break_earliest() {
        let s = series(vec![2, 1, 2]);
        let events = events_for_series(&s, &[], 4);
        assert_eq!(events[0].peak_day, s.day(0));
        assert_eq!(events[0].measures.days_to_peak, 0);
        assert_eq!(events[0].measures.days_to_fade, 2);
    }

    #[test]
    fn distinct_text_types_and_outlets() {
        let day = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        let make = |outlet: &str, tt: Option<&str>| DataInstance {
            doc_id: "d".to_string(),
            date: day,
            outlet: outlet.to_string(),
            text_hash: 0,
            iso3: "ITA".to_string(),
            text_type: tt.map(|t| t.to_string()),
        };
        let instances = vec![
            make("a", Some("wire")),
            make("a", Some("wire")),
            make("b", Some("print")),
            make("c", None),
        ];
        let s = series(vec![0, 4, 0]);
        let events = events_for_series(&s, &instances, 4);
        assert_eq!(events[0].measures.n_outlets, 3);
        assert_eq!(events[0].measures.n_text_types, 2);
    }

    proptest! {
        #[test]
        fn segment_matches_brute_force(
            counts in proptest::collection::vec(0u32..=5, 0..100),
            max_gap in 0usize..8,
        ) {
            let s = series_allow_empty(counts.clone());
            prop_assert_eq!(segment(&s, max_gap), brute_force_segment(&counts, max_gap));
        }

        #[test]
        fn volume_is_conserved(counts in proptest::collection::vec(0u32..=5, 1..100)) {
            let s = series(counts.clone());
            let spans = segment(&s, 4);
            let total: u32 = spans
                .iter()
                .map(|sp| s.counts[sp.first..=sp.last].iter().sum::<u32>())
                .sum();
            prop_assert_eq!(u64::from(total), s.total());
        }

        #[test]
        fn more_gap_never_more_events(
            counts in proptest::collection::vec(0u32..=5, 1..100),
            max_gap in 0usize..8,
        ) {
            let s = series(counts);
            prop_assert!(segment(&s, max_gap + 1).len() <= segment(&s, max_gap).len());
        }

        #[test]
        fn event_invariants_hold(counts in proptest::collection::vec(0u32..=5, 1..100)) {
            let s = series(counts);
            for event in events_for_series(&s, &[], 4) {
                let first = (event.first_day - s.period_start).num_days() as usize;
                let last = (event.last_day - s.period_start).num_days() as usize;
                prop_assert!(s.counts[first] >= 1);
                prop_assert!(s.counts[last] >= 1);
                prop_assert!(event.first_day <= event.peak_day);
                prop_assert!(event.peak_day <= event.last_day);
                let m = &event.measures;
                prop_assert_eq!(m.days_to_peak + m.days_to_fade, m.duration_days - 1);
                let active = s.counts[first..=last].iter().filter(|&&c| c > 0).count() as u32;
                prop_assert!(m.total_volume >= active);
                prop_assert!(active >= 1);
                // every interior zero-run is short
                let mut run = 0usize;
                for &c in &s.counts[first..=last] {
                    if c == 0 { run += 1; } else { run = 0; }
                    prop_assert!(run <= 4);
                }
            }
        }
    }

    fn series_allow_empty(counts: Vec<u32>) -> CountSeries {
        let len = counts.len().max(1) as u64;
        CountSeries {
            iso3: "ITA".to_string(),
            period_start: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            period_end: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(len - 1),
            counts,
        }
    }
}
