//! Injection of spoofing and layering patterns into an existing stream.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::book::{bucketize, ReplayMode};
use crate::event::{Action, AreaConfig, Event, Quotes, Side, SizeUnits, Ticks};
use crate::momentum::{classify_area, Area};
use crate::precision::Precision;
use crate::time::{format_timestamp, parse_timestamp, Micros};

/// Prefix of every injected order id.
pub const SYNTHETIC_PREFIX: &str = "synthetic-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SpoofStyle {
    /// One large order, submitted and later canceled.
    Traditional,
    /// `levels` orders `level_gap` ticks apart, moving away from the spread.
    /// Level `i` is submitted `i * level_interval_us` after the first; all
    /// levels are canceled together.
    Layered {
        levels: usize,
        level_gap: Ticks,
        #[serde(default)]
        level_interval_us: Micros,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpoofPrice {
    /// First level at this price.
    Absolute(Ticks),
    /// First level this many ticks beyond the active-area boundary of the
    /// quotes prevailing at submission.
    BeyondActive(Ticks),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpoofSpec {
    pub style: SpoofStyle,
    pub side: Side,
    pub price: SpoofPrice,
    pub size: SizeUnits,
    pub submit_ts: Micros,
    pub cancel_ts: Micros,
}

impl SpoofSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.cancel_ts <= self.submit_ts {
            return invalid("cancel_ts must be after submit_ts");
        }
        if self.size < 1 {
            return invalid("size must be positive");
        }
        if let SpoofStyle::Layered {
            levels,
            level_gap,
            level_interval_us,
        } = self.style
        {
            if levels < 2 {
                return invalid("layered spoofing needs at least 2 levels");
            }
            if level_gap < 1 {
                return invalid("level_gap must be at least one tick");
            }
            if level_interval_us < 0 {
                return invalid("level_interval_us must be non-negative");
            }
            if self.last_submit_ts() >= self.cancel_ts {
                return invalid("every level must be submitted before cancel_ts");
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        match self.style {
            SpoofStyle::Traditional => 1,
            SpoofStyle::Layered { levels, .. } => levels,
        }
    }

    /// Submission time of level `i`.
    pub fn submit_ts_of(&self, level: usize) -> Micros {
        match self.style {
            SpoofStyle::Traditional => self.submit_ts,
            SpoofStyle::Layered { level_interval_us, .. } => self
                .submit_ts
                .saturating_add(level_interval_us.saturating_mul(level as i64)),
        }
    }

    pub fn last_submit_ts(&self) -> Micros {
        self.submit_ts_of(self.levels().saturating_sub(1))
    }

    /// Level prices given the quotes prevailing at submission.
    pub fn prices(&self, quotes: Option<Quotes>, alpha: Ticks) -> Result<Vec<Ticks>, SynthError> {
        let outward = match self.side {
            Side::Buy => -1,
            Side::Sell => 1,
        };
        let first = match self.price {
            SpoofPrice::Absolute(p) => p,
            SpoofPrice::BeyondActive(offset) => {
                let q = quotes.ok_or(SynthError::NoQuotes(self.submit_ts))?;
                match self.side {
                    Side::Buy => q.best_bid - alpha - offset,
                    Side::Sell => q.best_ask + alpha + offset,
                }
            }
        };
        let gap = match self.style {
            SpoofStyle::Traditional => 0,
            SpoofStyle::Layered { level_gap, .. } => level_gap,
        };
        let prices: Vec<Ticks> = (0..self.levels() as i64).map(|i| first + outward * i * gap).collect();
        if prices.iter().any(|&p| p < 1) {
            return Err(SynthError::InvalidSpec(format!(
                "level price below one tick: {prices:?}"
            )));
        }
        Ok(prices)
    }
}

/// A spoof spec as written in a file: decimal prices and sizes, text
/// timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpoofSpecFile {
    pub style: SpoofStyle,
    pub side: Side,
    /// First level price; exclusive with `offset`.
    #[serde(default)]
    pub price: Option<String>,
    /// Distance beyond the active-area boundary; exclusive with `price`.
    #[serde(default)]
    pub offset: Option<String>,
    pub size: String,
    pub submit: String,
    pub cancel: String,
}

impl SpoofSpecFile {
    pub fn resolve(&self, precision: &Precision, base_date: NaiveDate) -> Result<SpoofSpec, SynthError> {
        let bad = |what: &str, e: &dyn std::fmt::Display| SynthError::InvalidSpec(format!("{what}: {e}"));
        let price = match (&self.price, &self.offset) {
            (Some(p), None) => SpoofPrice::Absolute(precision.price_ticks(p).map_err(|e| bad("price", &e))?),
            (None, Some(o)) => SpoofPrice::BeyondActive(precision.price_ticks(o).map_err(|e| bad("offset", &e))?),
            _ => {
                return Err(SynthError::InvalidSpec(
                    "give exactly one of `price` and `offset`".into(),
                ))
            }
        };
        let spec = SpoofSpec {
            style: self.style,
            side: self.side,
            price,
            size: precision.size_units(&self.size).map_err(|e| bad("size", &e))?,
            submit_ts: parse_timestamp(&self.submit, base_date).map_err(|e| bad("submit", &e))?,
            cancel_ts: parse_timestamp(&self.cancel, base_date).map_err(|e| bad("cancel", &e))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectedRecord {
    pub order_id: String,
    pub action: Action,
    pub side: Side,
    pub timestamp: String,
    pub price: String,
    pub size: String,
}

/// Ground truth for one injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectionLabel {
    pub order_ids: Vec<String>,
    pub records: Vec<InjectedRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectOutcome {
    pub stream: Vec<Event>,
    /// Injected events in time order.
    pub injected: Vec<Event>,
    pub warnings: Vec<String>,
}

impl InjectOutcome {
    pub fn order_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.injected.iter().map(|e| e.order_id.clone()).collect();
        ids.dedup();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn label(&self, precision: &Precision) -> InjectionLabel {
        InjectionLabel {
            order_ids: self.order_ids(),
            records: self
                .injected
                .iter()
                .map(|e| InjectedRecord {
                    order_id: e.order_id.clone(),
                    action: e.action,
                    side: e.side,
                    timestamp: format_timestamp(e.ts),
                    price: e.price.map(|p| precision.format_price(p)).unwrap_or_default(),
                    size: precision.format_size(e.size),
                })
                .collect(),
            warnings: self.warnings.clone(),
        }
    }
}

fn next_synthetic_index(stream: &[Event]) -> u64 {
    stream
        .iter()
        .filter_map(|e| e.order_id.strip_prefix(SYNTHETIC_PREFIX)?.parse::<u64>().ok())
        .max()
        .map_or(1, |n| n + 1)
}

/// Adds the spec's submits and cancels to a time-sorted stream. Existing
/// events keep their relative order and come first among equal timestamps.
pub fn inject_spoof(stream: &[Event], spec: &SpoofSpec, cfg: &AreaConfig) -> Result<InjectOutcome, SynthError> {
    spec.validate()?;
    let (Some(first), Some(last)) = (stream.first(), stream.last()) else {
        return Err(SynthError::OutsideSpan {
            ts: spec.submit_ts,
            first: 0,
            last: 0,
        });
    };
    for ts in [spec.submit_ts, spec.cancel_ts] {
        if ts < first.ts || ts > last.ts {
            return Err(SynthError::OutsideSpan {
                ts,
                first: first.ts,
                last: last.ts,
            });
        }
    }
    let series = bucketize(stream, cfg, None, ReplayMode::Lenient)?;
    let quotes = series.bucket_at(spec.submit_ts).and_then(|b| b.ref_quotes);
    let prices = spec.prices(quotes, cfg.alpha)?;

    let mut warnings = Vec::new();
    match quotes {
        Some(q) => {
            for &p in &prices {
                let area = classify_area(p, q, cfg.alpha);
                if area != Area::Passive {
                    warnings.push(format!(
                        "level at {} is in the {area} area under quotes {}/{}",
                        cfg.precision.format_price(p),
                        cfg.precision.format_price(q.best_bid),
                        cfg.precision.format_price(q.best_ask)
                    ));
                }
            }
        }
        None => warnings.push(format!("no reference quotes at {}", format_timestamp(spec.submit_ts))),
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let base = next_synthetic_index(stream);
    let ids: Vec<String> = (0..prices.len() as u64)
        .map(|i| format!("{SYNTHETIC_PREFIX}{}", base + i))
        .collect();
    let mut injected = Vec::with_capacity(2 * prices.len());
    for (i, (id, &p)) in ids.iter().zip(&prices).enumerate() {
        injected.push(Event::limit(
            spec.submit_ts_of(i),
            id.clone(),
            Action::Submit,
            spec.side,
            p,
            spec.size,
        ));
    }
    for (id, &p) in ids.iter().zip(&prices) {
        injected.push(Event::limit(
            spec.cancel_ts,
            id.clone(),
            Action::Cancel,
            spec.side,
            p,
            spec.size,
        ));
    }

    let mut merged = Vec::with_capacity(stream.len() + injected.len());
    let mut extra = injected.iter().peekable();
    for e in stream {
        while let Some(x) = extra.next_if(|x| x.ts < e.ts) {
            merged.push(x.clone());
        }
        merged.push(e.clone());
    }
    merged.extend(extra.cloned());
    Ok(InjectOutcome {
        stream: merged,
        injected,
        warnings,
    })
}
