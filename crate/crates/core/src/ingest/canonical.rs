//! Canonical record format.
//!
//! CSV columns are `ts,order_id,action,side,kind,price,size`; the JSONL form
//! uses the same field names. `price` is empty (CSV) or `null` (JSON) for
//! market submits. Prices and sizes are decimal strings at the instrument's
//! precision.

use serde::{Deserialize, Serialize};

use super::{ParseOptions, RecordError};
use crate::event::{Event, SizeUnits, Ticks};
use crate::precision::Precision;
use crate::time::{format_timestamp, parse_timestamp, Micros};

pub const CSV_HEADER: &str = "ts,order_id,action,side,kind,price,size";

const FIELDS: [&str; 7] = ["ts", "order_id", "action", "side", "kind", "price", "size"];

fn field_err(field: &'static str, value: &str, reason: impl ToString) -> RecordError {
    RecordError::Field {
        field,
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

pub(crate) fn parse_ts(text: &str, opts: &ParseOptions) -> Result<Micros, RecordError> {
    parse_timestamp(text, opts.base_date).map_err(|e| field_err("ts", text, e))
}

pub(crate) fn parse_price(text: &str, field: &'static str, precision: &Precision) -> Result<Ticks, RecordError> {
    precision
        .price_ticks(text)
        .map_err(|source| RecordError::Precision { field, source })
}

pub(crate) fn parse_size(text: &str, field: &'static str, precision: &Precision) -> Result<SizeUnits, RecordError> {
    precision
        .size_units(text)
        .map_err(|source| RecordError::Precision { field, source })
}

fn parse_order_id(text: &str) -> Result<String, RecordError> {
    let id = text.trim();
    if id.is_empty() {
        return Err(field_err("order_id", text, "empty order id"));
    }
    Ok(id.to_string())
}

#[allow(clippy::too_many_arguments)]
fn build(
    ts: Micros,
    order_id: String,
    action: &str,
    side: &str,
    kind: &str,
    price: Option<&str>,
    size: &str,
    precision: &Precision,
) -> Result<Event, RecordError> {
    let event = Event {
        ts,
        order_id,
        action: action.parse().map_err(|e| field_err("action", action, e))?,
        side: side.parse().map_err(|e| field_err("side", side, e))?,
        kind: kind.parse().map_err(|e| field_err("kind", kind, e))?,
        price: match price.map(str::trim) {
            None | Some("") => None,
            Some(p) => Some(parse_price(p, "price", precision)?),
        },
        size: parse_size(size, "size", precision)?,
    };
    event.check().map_err(|e| {
        let field = match e {
            crate::event::EventError::NonPositiveSize(_) => "size",
            _ => "price",
        };
        field_err(field, price.unwrap_or(""), e)
    })?;
    Ok(event)
}

/// Parses one canonical CSV line.
pub fn parse_canonical_csv(line: &str, opts: &ParseOptions) -> Result<Event, RecordError> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
    if fields.len() != FIELDS.len() {
        return Err(RecordError::FieldCount {
            expected: FIELDS.len(),
            found: fields.len(),
        });
    }
    let ts = parse_ts(fields[0], opts)?;
    build(
        ts,
        parse_order_id(fields[1])?,
        fields[2],
        fields[3],
        fields[4],
        Some(fields[5]),
        fields[6],
        &opts.precision,
    )
}

/// A JSON scalar accepted where a decimal or timestamp is expected.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Text(String),
    Number(serde_json::Number),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Text(s) => s.clone(),
            Scalar::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    ts: Scalar,
    order_id: String,
    action: String,
    side: String,
    kind: String,
    #[serde(default)]
    price: Option<Scalar>,
    size: Scalar,
}

/// Parses one canonical JSONL line. A numeric `ts` is taken as microseconds
/// since the epoch.
pub fn parse_canonical_json(line: &str, opts: &ParseOptions) -> Result<Event, RecordError> {
    let rec: JsonRecord = serde_json::from_str(line).map_err(|e| RecordError::Json(e.to_string()))?;
    let ts = match &rec.ts {
        Scalar::Number(n) => n
            .as_i64()
            .ok_or_else(|| field_err("ts", &n.to_string(), "expected integer microseconds"))?,
        Scalar::Text(s) => parse_ts(s, opts)?,
    };
    let price = rec.price.as_ref().map(Scalar::text);
    build(
        ts,
        parse_order_id(&rec.order_id)?,
        &rec.action,
        &rec.side,
        &rec.kind,
        price.as_deref(),
        &rec.size.text(),
        &opts.precision,
    )
}

/// Parses a canonical line, picking CSV or JSON by its first character.
pub fn parse_canonical(line: &str, opts: &ParseOptions) -> Result<Event, RecordError> {
    if line.trim_start().starts_with('{') {
        parse_canonical_json(line, opts)
    } else {
        parse_canonical_csv(line, opts)
    }
}

pub fn to_csv_line(e: &Event, precision: &Precision) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        format_timestamp(e.ts),
        e.order_id,
        e.action,
        e.side,
        e.kind,
        e.price.map(|p| precision.format_price(p)).unwrap_or_default(),
        precision.format_size(e.size)
    )
}

#[derive(Serialize)]
struct JsonOut<'a> {
    ts: String,
    order_id: &'a str,
    action: &'a str,
    side: &'a str,
    kind: &'a str,
    price: Option<String>,
    size: String,
}

pub fn to_json_line(e: &Event, precision: &Precision) -> String {
    let out = JsonOut {
        ts: format_timestamp(e.ts),
        order_id: &e.order_id,
        action: e.action.as_str(),
        side: e.side.as_str(),
        kind: e.kind.as_str(),
        price: e.price.map(|p| precision.format_price(p)),
        size: precision.format_size(e.size),
    };
    serde_json::to_string(&out).expect("record serializes")
}
