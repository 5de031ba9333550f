//! Order events as particles: area classification, velocity and momentum.
//!
//! Every priced event is placed relative to its bucket's frozen reference
//! quotes `(b, a)` and the active-area depth `alpha`:
//!
//! * active area: `[b - alpha, a + alpha]`
//! * passive area: `[b - 2 alpha, b - alpha) U (a + alpha, a + 2 alpha]`
//!
//! A buy moves between the lower edge of its area (`b - alpha_eff`) and its
//! effective price `p*`; a sell between the upper edge (`a + alpha_eff`) and
//! `p*`. Submits move from the edge to `p*`, cancels from `p*` back to the
//! edge, with `alpha_eff = alpha` in the active area and `2 alpha` in the
//! passive one.
//!
//! Every velocity in a bucket shares the factor `1 / dt`, so momentum is kept
//! as the exact integer `size * displacement` ([`RawMomentum`], size-units x
//! ticks per sampling period) and only scaled to physical units on output.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{Bucket, BucketSeries};
use crate::event::{Action, AreaConfig, Event, MatchAttribution, OrderKind, Quotes, Side, Ticks};
use crate::time::{Micros, MICROS_PER_SEC};

/// Size-units x ticks per sampling period.
pub type RawMomentum = i128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Area {
    Active,
    Passive,
    Outside,
}

impl Area {
    pub fn as_str(self) -> &'static str {
        match self {
            Area::Active => "active",
            Area::Passive => "passive",
            Area::Outside => "outside",
        }
    }

    /// Depth of this area's outer edge, `alpha` or `2 alpha`.
    pub fn effective_alpha(self, alpha: Ticks) -> Option<Ticks> {
        match self {
            Area::Active => Some(alpha),
            Area::Passive => Some(2 * alpha),
            Area::Outside => None,
        }
    }
}

impl std::fmt::Display for Area {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which order flow a sample aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Limit,
    Market,
    #[default]
    Both,
}

impl Split {
    fn admits(self, flow: Flow) -> bool {
        matches!(
            (self, flow),
            (Split::Both, _) | (Split::Limit, Flow::Limit) | (Split::Market, Flow::Market)
        )
    }
}

/// Limit-order flow or market-order flow (market submits, trades, and
/// marketable limit submits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    Limit,
    Market,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentumError {
    #[error("{action} event `{order_id}` has no price")]
    Unpriced { order_id: String, action: Action },
    #[error("event `{0}` lies outside both areas")]
    OutsideArea(String),
    #[error("bucket ending at {0} has no reference quotes")]
    Unclassifiable(Micros),
}

pub fn classify_area(price: Ticks, q: Quotes, alpha: Ticks) -> Area {
    let (b, a) = (q.best_bid, q.best_ask);
    if price >= b - alpha && price <= a + alpha {
        Area::Active
    } else if (price >= b - 2 * alpha && price < b - alpha) || (price > a + alpha && price <= a + 2 * alpha) {
        Area::Passive
    } else {
        Area::Outside
    }
}

/// Quoted price after clamping: buys never sit above the ask and sells never
/// below the bid. Market submits take the opposite quote.
pub fn effective_price(e: &Event, q: Quotes) -> Option<Ticks> {
    if e.action == Action::Submit && e.kind == OrderKind::Market {
        return Some(match e.side {
            Side::Buy => q.best_ask,
            Side::Sell => q.best_bid,
        });
    }
    let p = e.price?;
    Some(match e.side {
        Side::Buy => p.min(q.best_ask),
        Side::Sell => p.max(q.best_bid),
    })
}

/// Edge a particle moves from or to: `b - alpha_eff` for buys, `a + alpha_eff`
/// for sells.
pub fn area_edge(side: Side, q: Quotes, alpha_eff: Ticks) -> Ticks {
    match side {
        Side::Buy => q.best_bid - alpha_eff,
        Side::Sell => q.best_ask + alpha_eff,
    }
}

/// Distance travelled during one sampling period, in ticks (velocity x dt).
pub fn event_displacement(e: &Event, q: Quotes, alpha_eff: Ticks) -> Result<Ticks, MomentumError> {
    let p = effective_price(e, q).ok_or_else(|| MomentumError::Unpriced {
        order_id: e.order_id.clone(),
        action: e.action,
    })?;
    let edge = area_edge(e.side, q, alpha_eff);
    Ok(match e.action {
        Action::Submit | Action::Match => p - edge,
        Action::Cancel => edge - p,
    })
}

/// Velocity in ticks per second.
pub fn event_velocity(e: &Event, q: Quotes, alpha_eff: Ticks, dt: Micros) -> Result<Ratio<i64>, MomentumError> {
    let d = event_displacement(e, q, alpha_eff)?;
    Ok(Ratio::new(d * MICROS_PER_SEC, dt))
}

/// `size * displacement` for an event already known to lie in `area`.
pub fn event_momentum(e: &Event, q: Quotes, cfg: &AreaConfig, area: Area) -> Result<RawMomentum, MomentumError> {
    let alpha_eff = area
        .effective_alpha(cfg.alpha)
        .ok_or_else(|| MomentumError::OutsideArea(e.order_id.clone()))?;
    let d = event_displacement(e, q, alpha_eff)?;
    Ok(RawMomentum::from(e.size) * RawMomentum::from(d))
}

/// One momentum term produced by an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contribution {
    pub area: Area,
    pub flow: Flow,
    pub momentum: RawMomentum,
}

fn flow_of(e: &Event, p: Ticks, q: Quotes) -> Flow {
    match (e.action, e.kind) {
        (Action::Match, _) | (Action::Submit, OrderKind::Market) => Flow::Market,
        (Action::Submit, OrderKind::Limit) => {
            let opposite = match e.side {
                Side::Buy => q.best_ask,
                Side::Sell => q.best_bid,
            };
            if p == opposite {
                Flow::Market
            } else {
                Flow::Limit
            }
        }
        (Action::Cancel, _) => Flow::Limit,
    }
}

fn single_contribution(e: &Event, q: Quotes, alpha: Ticks) -> Result<Contribution, MomentumError> {
    let p = effective_price(e, q).ok_or_else(|| MomentumError::Unpriced {
        order_id: e.order_id.clone(),
        action: e.action,
    })?;
    let area = classify_area(p, q, alpha);
    let momentum = match area.effective_alpha(alpha) {
        Some(alpha_eff) => {
            let edge = area_edge(e.side, q, alpha_eff);
            let d = match e.action {
                Action::Submit | Action::Match => p - edge,
                Action::Cancel => edge - p,
            };
            RawMomentum::from(e.size) * RawMomentum::from(d)
        }
        None => 0,
    };
    Ok(Contribution {
        area,
        flow: flow_of(e, p, q),
        momentum,
    })
}

/// Momentum terms of one event: one for most events, two for a trade under
/// [`MatchAttribution::BothSides`] (the resting order leaves like a cancel).
pub fn contributions(e: &Event, q: Quotes, cfg: &AreaConfig) -> Result<[Option<Contribution>; 2], MomentumError> {
    let main = single_contribution(e, q, cfg.alpha)?;
    let resting = if e.action == Action::Match && cfg.match_attribution == MatchAttribution::BothSides {
        let leaving = Event {
            action: Action::Cancel,
            side: e.side.opposite(),
            kind: OrderKind::Limit,
            ..e.clone()
        };
        Some(single_contribution(&leaving, q, cfg.alpha)?)
    } else {
        None
    };
    Ok([Some(main), resting])
}

/// Net momentum of one bucket in one area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MomentumSample {
    pub bucket_end: Micros,
    pub area: Area,
    pub m_limit: RawMomentum,
    pub m_market: RawMomentum,
    pub m_total: RawMomentum,
}

impl MomentumSample {
    pub fn zero(bucket_end: Micros, area: Area) -> Self {
        MomentumSample {
            bucket_end,
            area,
            m_limit: 0,
            m_market: 0,
            m_total: 0,
        }
    }

    fn add(&mut self, flow: Flow, m: RawMomentum) {
        match flow {
            Flow::Limit => self.m_limit += m,
            Flow::Market => self.m_market += m,
        }
        self.m_total += m;
    }
}

/// Sums the momentum of every event in `b` that falls in `area`.
pub fn bucket_net_momentum(
    b: &Bucket<'_>,
    cfg: &AreaConfig,
    area: Area,
    split: Split,
) -> Result<MomentumSample, MomentumError> {
    let [active, passive] = bucket_both_areas(b, cfg, split)?;
    match area {
        Area::Active => Ok(active),
        Area::Passive => Ok(passive),
        Area::Outside => Err(MomentumError::OutsideArea(format!("bucket {}", b.end))),
    }
}

/// Active and passive samples of one bucket in a single pass.
pub fn bucket_both_areas(b: &Bucket<'_>, cfg: &AreaConfig, split: Split) -> Result<[MomentumSample; 2], MomentumError> {
    let q = b.ref_quotes.ok_or(MomentumError::Unclassifiable(b.end))?;
    let mut active = MomentumSample::zero(b.end, Area::Active);
    let mut passive = MomentumSample::zero(b.end, Area::Passive);
    for e in b.events {
        for c in contributions(e, q, cfg)?.into_iter().flatten() {
            if !split.admits(c.flow) {
                continue;
            }
            match c.area {
                Area::Active => active.add(c.flow, c.momentum),
                Area::Passive => passive.add(c.flow, c.momentum),
                Area::Outside => {}
            }
        }
    }
    Ok([active, passive])
}

/// Per-bucket samples over a whole replay. Unclassifiable buckets are left
/// out and counted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MomentumSeries {
    pub active: Vec<MomentumSample>,
    pub passive: Vec<MomentumSample>,
    pub skipped_unclassifiable: usize,
}

impl MomentumSeries {
    pub fn area(&self, area: Area) -> &[MomentumSample] {
        match area {
            Area::Passive => &self.passive,
            _ => &self.active,
        }
    }
}

pub fn momentum_series(
    series: &BucketSeries<'_>,
    cfg: &AreaConfig,
    split: Split,
) -> Result<MomentumSeries, MomentumError> {
    let mut out = MomentumSeries {
        active: Vec::with_capacity(series.buckets.len()),
        passive: Vec::with_capacity(series.buckets.len()),
        skipped_unclassifiable: 0,
    };
    for b in &series.buckets {
        if !b.is_classifiable() {
            out.skipped_unclassifiable += 1;
            continue;
        }
        let [a, p] = bucket_both_areas(b, cfg, split)?;
        out.active.push(a);
        out.passive.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CumulativeSample {
    pub bucket_end: Micros,
    pub cum_limit: RawMomentum,
    pub cum_market: RawMomentum,
    pub cum_total: RawMomentum,
}

/// Running sums of limit, market and total momentum.
pub fn cumulative_series(samples: &[MomentumSample]) -> Vec<CumulativeSample> {
    samples
        .iter()
        .scan((0, 0, 0), |acc, s| {
            acc.0 += s.m_limit;
            acc.1 += s.m_market;
            acc.2 += s.m_total;
            Some(CumulativeSample {
                bucket_end: s.bucket_end,
                cum_limit: acc.0,
                cum_market: acc.1,
                cum_total: acc.2,
            })
        })
        .collect()
}

/// Raw momentum in quote-currency x size per second.
pub fn to_physical(m: RawMomentum, cfg: &AreaConfig) -> f64 {
    m as f64 * cfg.momentum_scale()
}
