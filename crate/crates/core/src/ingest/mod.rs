//! Parsing, validation and normalisation of Level-3 event streams.

mod canonical;
mod exchange;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use chrono::NaiveDate;
use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{
    parse_canonical, parse_canonical_csv, parse_canonical_json, to_csv_line, to_json_line, CSV_HEADER,
};
pub use exchange::{parse_exchange_feed, FeedItem};

use crate::event::{Action, Event, OrderKind, SizeUnits, Ticks};
use crate::precision::{Precision, PrecisionError};
use crate::time::epoch_date;

/// Why a single record could not be turned into an [`Event`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("field `{field}` = `{value}`: {reason}")]
    Field {
        field: &'static str,
        value: String,
        reason: String,
    },
    #[error("field `{field}`: {source}")]
    Precision {
        field: &'static str,
        #[source]
        source: PrecisionError,
    },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

impl RecordError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            RecordError::Field { field, .. } | RecordError::Precision { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub precision: Precision,
    /// Date given to time-of-day timestamps.
    pub base_date: NaiveDate,
}

impl ParseOptions {
    pub fn new(precision: Precision) -> Self {
        ParseOptions {
            precision,
            base_date: epoch_date(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    CanonicalCsv,
    CanonicalJsonl,
    ExchangeJsonl,
}

impl InputFormat {
    /// Guesses a canonical format from the file name (`.gz` suffix ignored).
    pub fn from_path(path: &Path) -> InputFormat {
        let name = path.to_string_lossy();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".jsonl") || name.ends_with(".json") {
            InputFormat::CanonicalJsonl
        } else {
            InputFormat::CanonicalCsv
        }
    }
}

/// A rejected line, kept as a sample in [`StreamReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub field: Option<&'static str>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ActionHistogram {
    pub submit: usize,
    pub cancel: usize,
    #[serde(rename = "match")]
    pub matched: usize,
}

impl ActionHistogram {
    fn record(&mut self, action: Action) {
        match action {
            Action::Submit => self.submit += 1,
            Action::Cancel => self.cancel += 1,
            Action::Match => self.matched += 1,
        }
    }
}

/// Findings of ingestion and validation. `total_records = accepted + rejected`,
/// where rejected covers both parse errors and skipped feed messages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StreamReport {
    pub total_records: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub parse_errors: usize,
    pub parse_error_samples: Vec<LineError>,
    pub skipped: BTreeMap<String, usize>,
    pub non_monotone_ts: usize,
    pub dangling_cancels: usize,
    pub action_histogram: ActionHistogram,
}

/// How many rejected lines are kept verbatim in a report.
pub const ERROR_SAMPLES: usize = 10;

impl StreamReport {
    fn reject(&mut self, line: usize, err: &RecordError) {
        self.total_records += 1;
        self.rejected += 1;
        self.parse_errors += 1;
        if self.parse_error_samples.len() < ERROR_SAMPLES {
            self.parse_error_samples.push(LineError {
                line,
                field: err.field(),
                message: err.to_string(),
            });
        }
    }

    fn skip(&mut self, reason: String) {
        self.total_records += 1;
        self.rejected += 1;
        *self.skipped.entry(reason).or_insert(0) += 1;
    }

    /// Folds stream-level findings from [`validate_stream`] into a parse report.
    pub fn merge_validation(&mut self, v: &StreamReport) {
        self.non_monotone_ts = v.non_monotone_ts;
        self.dangling_cancels = v.dangling_cancels;
        self.action_histogram = v.action_histogram;
    }
}

/// Counts out-of-order timestamps in the given order, then checks cancels
/// against open orders over the time-sorted stream.
pub fn validate_stream(events: &[Event]) -> StreamReport {
    let mut report = StreamReport {
        total_records: events.len(),
        accepted: events.len(),
        ..StreamReport::default()
    };
    report.non_monotone_ts = events.windows(2).filter(|w| w[1].ts < w[0].ts).count();
    for e in events {
        report.action_histogram.record(e.action);
    }

    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| events[i].ts);
    let mut open: HashMap<&str, (Ticks, SizeUnits)> = HashMap::new();
    for e in order.into_iter().map(|i| &events[i]) {
        match (e.action, e.kind) {
            (Action::Submit, OrderKind::Limit) => {
                if let Some(p) = e.price {
                    open.insert(&e.order_id, (p, e.size));
                }
            }
            (Action::Submit, OrderKind::Market) => {}
            (Action::Match, _) => {
                if let Some(o) = open.get_mut(e.order_id.as_str()) {
                    o.1 -= e.size;
                    if o.1 <= 0 {
                        open.remove(e.order_id.as_str());
                    }
                }
            }
            (Action::Cancel, _) => match open.get(e.order_id.as_str()) {
                Some(&(price, remaining)) if Some(price) == e.price && e.size <= remaining => {
                    open.remove(e.order_id.as_str());
                }
                _ => report.dangling_cancels += 1,
            },
        }
    }
    report
}

/// Stable sort by timestamp; returns how many adjacent pairs were out of order.
pub fn sort_stream(events: &mut [Event]) -> usize {
    let disorder = events.windows(2).filter(|w| w[1].ts < w[0].ts).count();
    if disorder > 0 {
        events.sort_by_key(|e| e.ts);
    }
    disorder
}

/// Parsed events plus the ingestion report.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub events: Vec<Event>,
    pub report: StreamReport,
}

/// Parses every line of `reader`. Bad records are counted, not fatal; blank
/// lines and a leading CSV header are ignored.
pub fn parse_lines<R: BufRead>(reader: R, format: InputFormat, opts: &ParseOptions) -> io::Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || (line_no == 1 && format == InputFormat::CanonicalCsv && trimmed.starts_with("ts,")) {
            continue;
        }
        let parsed = match format {
            InputFormat::CanonicalCsv => parse_canonical_csv(trimmed, opts).map(FeedItem::Event),
            InputFormat::CanonicalJsonl => parse_canonical_json(trimmed, opts).map(FeedItem::Event),
            InputFormat::ExchangeJsonl => parse_exchange_feed(trimmed, opts),
        };
        match parsed {
            Ok(FeedItem::Event(e)) => {
                out.report.total_records += 1;
                out.report.accepted += 1;
                out.events.push(e);
            }
            Ok(FeedItem::Skipped(reason)) => out.report.skip(reason),
            Err(err) => out.report.reject(line_no, &err),
        }
    }
    let v = validate_stream(&out.events);
    out.report.merge_validation(&v);
    Ok(out)
}

/// Opens a file, transparently gunzipping it when it starts with the gzip
/// magic bytes.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut reader = BufReader::with_capacity(1 << 16, File::open(path).map_err(io_err)?);
    let magic = reader.fill_buf().map_err(io_err)?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        let decoder: Box<dyn Read> = Box::new(MultiGzDecoder::new(reader));
        Ok(Box::new(BufReader::with_capacity(1 << 16, decoder)))
    } else {
        Ok(Box::new(reader))
    }
}

pub fn read_file(path: &Path, format: InputFormat, opts: &ParseOptions) -> Result<Ingested, IngestError> {
    let reader = open_input(path)?;
    parse_lines(reader, format, opts).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serialises a stream in the canonical CSV form, header included.
pub fn write_csv<W: io::Write>(mut w: W, events: &[Event], precision: &Precision) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for e in events {
        writeln!(w, "{}", to_csv_line(e, precision))?;
    }
    Ok(())
}

pub fn write_jsonl<W: io::Write>(mut w: W, events: &[Event], precision: &Precision) -> io::Result<()> {
    for e in events {
        writeln!(w, "{}", to_json_line(e, precision))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Side;

    fn ev(ts: i64, id: &str, action: Action) -> Event {
        Event::limit(ts, id, action, Side::Buy, 100, 10)
    }

    #[test]
    fn validate_examples() {
        assert_eq!(validate_stream(&[]), StreamReport::default());
        let pair = [ev(1, "a", Action::Submit), ev(2, "a", Action::Cancel)];
        assert_eq!(validate_stream(&pair).dangling_cancels, 0);
        let lone = [ev(1, "a", Action::Cancel)];
        assert_eq!(validate_stream(&lone).dangling_cancels, 1);
    }

    #[test]
    fn cancel_after_full_fill_dangles() {
        let mut fill = ev(2, "a", Action::Match);
        fill.kind = OrderKind::Market;
        let events = [ev(1, "a", Action::Submit), fill, ev(3, "a", Action::Cancel)];
        assert_eq!(validate_stream(&events).dangling_cancels, 1);
    }

    #[test]
    fn non_monotone_counted_but_pairs_checked_sorted() {
        let events = [ev(5, "a", Action::Cancel), ev(1, "a", Action::Submit)];
        let r = validate_stream(&events);
        assert_eq!(r.non_monotone_ts, 1);
        assert_eq!(r.dangling_cancels, 0);
        let mut v = events.to_vec();
        assert_eq!(sort_stream(&mut v), 1);
        assert_eq!(v[0].action, Action::Submit);
    }

    #[test]
    fn parse_lines_counts() {
        let text = "ts,order_id,action,side,kind,price,size\n\
                    18:00:00.1,a,open,buy,limit,1.00,1\n\
                    \n\
                    x,y,z\n\
                    18:00:00.2,a,cancel,buy,limit,1.00,1\n";
        let out = parse_lines(
            text.as_bytes(),
            InputFormat::CanonicalCsv,
            &ParseOptions::new(Precision::LUNA_USD),
        )
        .unwrap();
        assert_eq!(out.events.len(), 2);
        let r = &out.report;
        assert_eq!((r.total_records, r.accepted, r.rejected, r.parse_errors), (3, 2, 1, 1));
        assert_eq!(r.parse_error_samples[0].line, 4);
        assert_eq!(
            r.action_histogram,
            ActionHistogram {
                submit: 1,
                cancel: 1,
                matched: 0
            }
        );
    }

    #[test]
    fn format_from_path() {
        assert_eq!(InputFormat::from_path(Path::new("a.csv.gz")), InputFormat::CanonicalCsv);
        assert_eq!(
            InputFormat::from_path(Path::new("a.jsonl.gz")),
            InputFormat::CanonicalJsonl
        );
        assert_eq!(
            InputFormat::from_path(Path::new("a.jsonl")),
            InputFormat::CanonicalJsonl
        );
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"18:00:00.1,a,open,buy,limit,1.00,1\n").unwrap();
        enc.finish().unwrap();
        let out = read_file(
            &path,
            InputFormat::CanonicalCsv,
            &ParseOptions::new(Precision::LUNA_USD),
        )
        .unwrap();
        assert_eq!(out.events.len(), 1);
    }

    proptest::proptest! {
        #[test]
        fn histogram_ignores_order(mut idx in proptest::collection::vec(0usize..3, 0..40), seed in 0u64..1000) {
            let actions = [Action::Submit, Action::Cancel, Action::Match];
            let events: Vec<Event> = idx.iter().enumerate().map(|(i, a)| ev(i as i64, "x", actions[*a])).collect();
            let base = validate_stream(&events).action_histogram;
            // deterministic shuffle
            let n = idx.len().max(1);
            idx.rotate_left((seed as usize) % n);
            let shuffled: Vec<Event> = idx.iter().enumerate().map(|(i, a)| ev(i as i64, "x", actions[*a])).collect();
            proptest::prop_assert_eq!(validate_stream(&shuffled).action_histogram, base);
        }
    }
}
