//! Event-sequence data model, validation, ingestion and persistence.
//!
//! An [`EventData`] holds one realization of a multivariate point process on
//! `(0, T]`: one strictly ascending sequence of event times per dimension plus
//! the observation horizon `T`. Ties across dimensions are legal, ties within
//! a dimension are rejected at construction (the likelihood is only well
//! defined for simple processes).
//!
//! Two on-disk formats are supported:
//! - CSV, headerless by default, two columns `dim_index,time`;
//! - JSON, `{"dims": d, "horizon": T, "times": [[..], ..]}`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated realization of a multivariate point process on `(0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventData {
    dims: usize,
    horizon: f64,
    times: Vec<Vec<f64>>,
}

impl EventData {
    /// Build an event set, checking all invariants.
    pub fn new(dims: usize, horizon: f64, times: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::validation(format!(
                "horizon must be a positive finite number, got {horizon}"
            )));
        }
        if times.len() != dims {
            return Err(Error::validation(format!(
                "expected {dims} event sequences, got {}",
                times.len()
            )));
        }
        for (j, seq) in times.iter().enumerate() {
            let mut prev = 0.0;
            for (i, &t) in seq.iter().enumerate() {
                if !t.is_finite() {
                    return Err(Error::validation(format!(
                        "non-finite time in dimension {j} at position {i}"
                    )));
                }
                if t <= 0.0 || t > horizon {
                    return Err(Error::validation(format!(
                        "time {t} in dimension {j} outside (0, {horizon}]"
                    )));
                }
                if i > 0 && t <= prev {
                    return Err(Error::validation(format!(
                        "times in dimension {j} not strictly ascending at position {i}: {prev} then {t}"
                    )));
                }
                prev = t;
            }
        }
        Ok(EventData { dims, horizon, times })
    }

    /// An empty process with the given number of dimensions.
    pub fn empty(dims: usize, horizon: f64) -> Result<Self> {
        Self::new(dims, horizon, vec![Vec::new(); dims])
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Event times of one dimension, strictly ascending.
    pub fn times(&self, j: usize) -> &[f64] {
        &self.times[j]
    }

    /// Number of events in dimension `j`.
    pub fn count(&self, j: usize) -> usize {
        self.times[j].len()
    }

    /// Per-dimension event counts.
    pub fn counts(&self) -> Vec<usize> {
        self.times.iter().map(Vec::len).collect()
    }

    /// Total number of events over all dimensions.
    pub fn total_count(&self) -> usize {
        self.times.iter().map(Vec::len).sum()
    }

    /// Largest per-dimension event count.
    pub fn max_count(&self) -> usize {
        self.times.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// All events merged into `(time, dim)` pairs, ascending in time with ties
    /// broken by dimension index.
    pub fn merged(&self) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = Vec::with_capacity(self.total_count());
        for (j, seq) in self.times.iter().enumerate() {
            all.extend(seq.iter().map(|&t| (t, j)));
        }
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all
    }
}

/// On-disk representation selector for [`load_events`] / [`save_events`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventFormat {
    /// Self-contained JSON document.
    Json,
    /// Headerless two-column CSV `dim_index,time`. The horizon is not stored
    /// in the file and must be supplied; `dims` is inferred as the largest
    /// dimension index plus one when not given.
    Csv {
        horizon: f64,
        dims: Option<usize>,
        header: bool,
    },
}

/// Load events from a file in the given format.
pub fn load_events(path: &Path, format: EventFormat) -> Result<EventData> {
    let text = fs::read_to_string(path)?;
    match format {
        EventFormat::Json => parse_events_json(&text),
        EventFormat::Csv { horizon, dims, header } => parse_events_csv(&text, horizon, dims, header),
    }
}

/// Write events to a file. CSV rows are merge-sorted by time (dimension index
/// breaks ties) so the file reads as a chronological log.
pub fn save_events(events: &EventData, path: &Path, format: EventFormat) -> Result<()> {
    let text = match format {
        EventFormat::Json => serde_json::to_string_pretty(events)
            .map_err(|e| Error::Format(e.to_string()))?,
        EventFormat::Csv { .. } => {
            let mut out = String::new();
            for (t, j) in events.merged() {
                out.push_str(&format!("{j},{t}\n"));
            }
            out
        }
    };
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn parse_events_json(text: &str) -> Result<EventData> {
    #[derive(Deserialize)]
    struct Raw {
        dims: usize,
        horizon: f64,
        times: Vec<Vec<f64>>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    EventData::new(raw.dims, raw.horizon, raw.times)
}

pub(crate) fn parse_events_csv(
    text: &str,
    horizon: f64,
    dims: Option<usize>,
    header: bool,
) -> Result<EventData> {
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if header && idx == 0 {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let dim_part = parts.next().unwrap_or("");
        let time_part = parts.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected two comma-separated columns".into(),
        })?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "expected exactly two columns".into(),
            });
        }
        let dim: usize = dim_part.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid dimension index '{}'", dim_part.trim()),
        })?;
        let time: f64 = time_part.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid time '{}'", time_part.trim()),
        })?;
        rows.push((dim, time));
    }

    let inferred = rows.iter().map(|&(d, _)| d + 1).max().unwrap_or(0);
    let d = match dims {
        Some(d) => {
            if inferred > d {
                return Err(Error::validation(format!(
                    "dimension index {} exceeds declared dims {d}",
                    inferred - 1
                )));
            }
            d
        }
        None => inferred,
    };

    let mut times = vec![Vec::new(); d];
    for &(dim, t) in &rows {
        times[dim].push(t);
    }
    // Within-dimension order must already hold in the file; EventData::new
    // rejects out-of-order or duplicate times.
    EventData::new(d, horizon, times)
}

/// Lay recordings end to end with cumulative time offsets, optionally
/// permuting their order first with a seeded shuffle.
pub fn concat_recordings(recordings: &[EventData], shuffle_seed: Option<u64>) -> Result<EventData> {
    if recordings.is_empty() {
        return Err(Error::validation("no recordings to concatenate"));
    }
    let dims = recordings[0].dims();
    for (k, rec) in recordings.iter().enumerate() {
        if rec.dims() != dims {
            return Err(Error::validation(format!(
                "recording {k} has {} dimensions, expected {dims}",
                rec.dims()
            )));
        }
    }

    let mut order: Vec<usize> = (0..recordings.len()).collect();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }

    let mut times = vec![Vec::new(); dims];
    let mut offset = 0.0;
    for &k in &order {
        let rec = &recordings[k];
        for j in 0..dims {
            times[j].extend(rec.times(j).iter().map(|&t| t + offset));
        }
        offset += rec.horizon();
    }
    EventData::new(dims, offset, times)
}

/// Keep events in `(a, b]`, shift them by `-a` and set the horizon to `b - a`.
pub fn restrict_window(events: &EventData, a: f64, b: f64) -> Result<EventData> {
    if !(a >= 0.0 && a < b && b <= events.horizon()) {
        return Err(Error::validation(format!(
            "window ({a}, {b}] invalid for horizon {}",
            events.horizon()
        )));
    }
    let times = (0..events.dims())
        .map(|j| {
            events
                .times(j)
                .iter()
                .filter(|&&t| t > a && t <= b)
                .map(|&t| t - a)
                .collect()
        })
        .collect();
    EventData::new(events.dims(), b - a, times)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_parse_basic() {
        let ev = parse_events_csv("0,0.5\n0,1.2\n1,0.9", 2.0, None, false).unwrap();
        assert_eq!(ev.dims(), 2);
        assert_eq!(ev.counts(), vec![2, 1]);
        assert_eq!(ev.times(0), &[0.5, 1.2]);
    }

    #[test]
    fn csv_rejects_order_violation() {
        let err = parse_events_csv("0,1.2\n0,0.5", 2.0, None, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn csv_rejects_duplicate_within_dimension() {
        let err = parse_events_csv("0,0.5\n0,0.5", 2.0, None, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn csv_empty_file_with_declared_dims() {
        let ev = parse_events_csv("", 10.0, Some(3), false).unwrap();
        assert_eq!(ev.dims(), 3);
        assert_eq!(ev.total_count(), 0);
    }

    #[test]
    fn csv_header_skipped() {
        let ev = parse_events_csv("dim,time\n0,0.5", 2.0, None, true).unwrap();
        assert_eq!(ev.counts(), vec![1]);
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let err = parse_events_csv("0,0.5\nbogus", 2.0, None, false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn time_outside_horizon_rejected() {
        let err = parse_events_csv("0,2.5", 2.0, None, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = parse_events_csv("0,0.0", 2.0, None, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn cross_dimension_ties_allowed() {
        let ev = parse_events_csv("0,0.5\n1,0.5", 2.0, None, false).unwrap();
        assert_eq!(ev.total_count(), 2);
    }

    #[test]
    fn concat_offsets_and_horizon() {
        let a = EventData::new(1, 5.0, vec![vec![1.0, 4.0]]).unwrap();
        let b = EventData::new(1, 7.0, vec![vec![2.0]]).unwrap();
        let cat = concat_recordings(&[a, b], None).unwrap();
        assert_eq!(cat.horizon(), 12.0);
        assert_eq!(cat.times(0), &[1.0, 4.0, 7.0]);
    }

    #[test]
    fn concat_single_is_identity() {
        let a = EventData::new(2, 5.0, vec![vec![1.0], vec![2.0, 3.0]]).unwrap();
        let cat = concat_recordings(std::slice::from_ref(&a), None).unwrap();
        assert_eq!(cat, a);
    }

    #[test]
    fn concat_deterministic_under_seed() {
        let recs: Vec<EventData> = (0..4)
            .map(|k| EventData::new(1, 3.0, vec![vec![1.0 + 0.1 * k as f64]]).unwrap())
            .collect();
        let x = concat_recordings(&recs, Some(9)).unwrap();
        let y = concat_recordings(&recs, Some(9)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn concat_dim_mismatch_rejected() {
        let a = EventData::empty(1, 5.0).unwrap();
        let b = EventData::empty(2, 5.0).unwrap();
        assert!(matches!(
            concat_recordings(&[a, b], None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn restrict_shifts_and_filters() {
        let ev = EventData::new(1, 4.0, vec![vec![0.5, 1.2, 3.0]]).unwrap();
        let w = restrict_window(&ev, 1.0, 3.0).unwrap();
        assert_eq!(w.horizon(), 2.0);
        let got = w.times(0);
        assert!((got[0] - 0.2).abs() < 1e-12 && (got[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_full_window_is_identity() {
        let ev = EventData::new(1, 4.0, vec![vec![0.5, 3.0]]).unwrap();
        let w = restrict_window(&ev, 0.0, 4.0).unwrap();
        assert_eq!(w, ev);
    }

    #[test]
    fn restrict_can_empty() {
        let ev = EventData::new(1, 4.0, vec![vec![0.5]]).unwrap();
        let w = restrict_window(&ev, 2.0, 4.0).unwrap();
        assert_eq!(w.total_count(), 0);
    }

    #[test]
    fn restrict_bad_window_rejected() {
        let ev = EventData::empty(1, 4.0).unwrap();
        assert!(restrict_window(&ev, 3.0, 3.0).is_err());
        assert!(restrict_window(&ev, 3.0, 2.0).is_err());
    }
}
