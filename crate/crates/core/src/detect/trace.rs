//! Trace anomalous buckets back to the order records behind them, and group
//! the traced records into layering candidates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::deviation::DeviationScore;
use super::DetectError;
use crate::book::BucketSeries;
use crate::event::{Action, AreaConfig, Event, SizeUnits, Ticks};
use crate::momentum::{contributions, Area, RawMomentum};
use crate::time::Micros;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TracedEvent {
    pub bucket_end: Micros,
    pub event: Event,
    /// The event's momentum in the traced area.
    pub momentum: RawMomentum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracedBucket {
    pub bucket_end: Micros,
    pub deviation: f64,
    pub events: Vec<TracedEvent>,
}

impl TracedBucket {
    /// An anomaly with no events in the traced area.
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// For each anomaly, the bucket's events in `area`, largest `|momentum|`
/// first (stream order among equals).
pub fn trace_orders(
    anomalies: &[DeviationScore],
    series: &BucketSeries<'_>,
    cfg: &AreaConfig,
    area: Area,
) -> Result<Vec<TracedBucket>, DetectError> {
    let mut out = Vec::with_capacity(anomalies.len());
    for a in anomalies {
        let bucket = series
            .bucket_at(a.bucket_end)
            .filter(|b| b.end == a.bucket_end)
            .ok_or(DetectError::UnknownBucket(a.bucket_end))?;
        let q = bucket.ref_quotes.ok_or(DetectError::UnknownBucket(a.bucket_end))?;
        let mut events = Vec::new();
        for e in bucket.events {
            let mut hit = false;
            let mut momentum = 0;
            for c in contributions(e, q, cfg)?.into_iter().flatten() {
                if c.area == area {
                    hit = true;
                    momentum += c.momentum;
                }
            }
            if hit {
                events.push(TracedEvent {
                    bucket_end: bucket.end,
                    event: e.clone(),
                    momentum,
                });
            }
        }
        events.sort_by_key(|e| std::cmp::Reverse(e.momentum.unsigned_abs()));
        out.push(TracedBucket {
            bucket_end: a.bucket_end,
            deviation: a.deviation,
            events,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterLabel {
    /// Submit/cancel pairs spread over two or more price levels.
    LayeredCandidate,
    /// Submit/cancel pairs at a single price level.
    Traditional,
    /// No submit was matched to a cancel.
    Unpaired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayeringCluster {
    pub size: SizeUnits,
    pub label: ClusterLabel,
    /// Distinct price levels of the matched pairs, descending.
    pub price_levels: Vec<Ticks>,
    pub pairs: usize,
    pub events: Vec<Event>,
}

/// Pairs submits with cancels: first by order id, then leftover records by
/// equal price. Returns the prices of the pairs found.
fn pair_prices(events: &[&Event]) -> Vec<Ticks> {
    let mut submits: HashMap<&str, Ticks> = HashMap::new();
    let mut pairs = Vec::new();
    let mut loose_submits: BTreeMap<Ticks, usize> = BTreeMap::new();
    let mut loose_cancels: BTreeMap<Ticks, usize> = BTreeMap::new();
    for e in events.iter().filter(|e| e.action == Action::Submit) {
        if let Some(p) = e.price {
            submits.insert(&e.order_id, p);
        }
    }
    let mut used: BTreeSet<&str> = BTreeSet::new();
    for e in events.iter().filter(|e| e.action == Action::Cancel) {
        let Some(p) = e.price else { continue };
        match submits.get(e.order_id.as_str()) {
            Some(&sp) if sp == p && used.insert(&e.order_id) => pairs.push(p),
            _ => *loose_cancels.entry(p).or_default() += 1,
        }
    }
    for (id, p) in &submits {
        if !used.contains(id) {
            *loose_submits.entry(*p).or_default() += 1;
        }
    }
    for (p, n) in loose_submits {
        let m = loose_cancels.get(&p).copied().unwrap_or(0).min(n);
        pairs.extend(std::iter::repeat_n(p, m));
    }
    pairs
}

/// Groups traced records by identical size. A group whose matched
/// submit/cancel pairs sit on two or more price levels is a layering
/// candidate. Clusters come out largest size first.
pub fn cluster_layering<'a>(traced: impl IntoIterator<Item = &'a Event>) -> Vec<LayeringCluster> {
    let mut groups: BTreeMap<SizeUnits, Vec<&Event>> = BTreeMap::new();
    for e in traced {
        groups.entry(e.size).or_default().push(e);
    }
    groups
        .into_iter()
        .rev()
        .map(|(size, mut events)| {
            events.sort_by_key(|e| e.ts);
            let pairs = pair_prices(&events);
            let levels: BTreeSet<Ticks> = pairs.iter().copied().collect();
            let label = match levels.len() {
                0 => ClusterLabel::Unpaired,
                1 => ClusterLabel::Traditional,
                _ => ClusterLabel::LayeredCandidate,
            };
            LayeringCluster {
                size,
                label,
                price_levels: levels.into_iter().rev().collect(),
                pairs: pairs.len(),
                events: events.into_iter().cloned().collect(),
            }
        })
        .collect()
}
