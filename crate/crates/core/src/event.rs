//! Domain types shared across the crate.
//!
//! Prices are integer ticks, sizes integer size-units and timestamps integer
//! microseconds. Floats only show up when results are formatted for output.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precision::Precision;
use crate::time::{Micros, MICROS_PER_SEC};

/// Price in ticks.
pub type Ticks = i64;
/// Order size in size-units.
pub type SizeUnits = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    /// A limit order opened on the book, or a market order submitted.
    Submit,
    Cancel,
    /// A trade. `order_id` names the resting order, `side` the aggressor.
    Match,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Limit,
    Market,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} `{value}`")]
pub struct UnknownToken {
    pub what: &'static str,
    pub value: String,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Submit => "open",
            Action::Cancel => "cancel",
            Action::Match => "match",
        }
    }
}

impl FromStr for Action {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" | "submit" => Ok(Action::Submit),
            "cancel" | "canceled" | "cancelled" => Ok(Action::Cancel),
            "match" => Ok(Action::Match),
            other => Err(UnknownToken {
                what: "action",
                value: other.to_string(),
            }),
        }
    }
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

impl FromStr for Side {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "buy" | "bid" => Ok(Side::Buy),
            "sell" | "ask" => Ok(Side::Sell),
            other => Err(UnknownToken {
                what: "side",
                value: other.to_string(),
            }),
        }
    }
}

impl OrderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderKind::Limit => "limit",
            OrderKind::Market => "market",
        }
    }
}

impl FromStr for OrderKind {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "limit" => Ok(OrderKind::Limit),
            "market" => Ok(OrderKind::Market),
            other => Err(UnknownToken {
                what: "order kind",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One Level-3 record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub ts: Micros,
    pub order_id: String,
    pub action: Action,
    pub side: Side,
    pub kind: OrderKind,
    /// `None` only for market submits.
    pub price: Option<Ticks>,
    pub size: SizeUnits,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("size must be positive, got {0}")]
    NonPositiveSize(SizeUnits),
    #[error("{0} event requires a positive price")]
    MissingPrice(Action),
    #[error("price must be positive, got {0}")]
    NonPositivePrice(Ticks),
}

impl Event {
    pub fn limit(
        ts: Micros,
        order_id: impl Into<String>,
        action: Action,
        side: Side,
        price: Ticks,
        size: SizeUnits,
    ) -> Self {
        Event {
            ts,
            order_id: order_id.into(),
            action,
            side,
            kind: OrderKind::Limit,
            price: Some(price),
            size,
        }
    }

    pub fn market(ts: Micros, order_id: impl Into<String>, side: Side, size: SizeUnits) -> Self {
        Event {
            ts,
            order_id: order_id.into(),
            action: Action::Submit,
            side,
            kind: OrderKind::Market,
            price: None,
            size,
        }
    }

    /// Checks the per-record invariants (positive size, priced unless a
    /// market submit).
    pub fn check(&self) -> Result<(), EventError> {
        if self.size <= 0 {
            return Err(EventError::NonPositiveSize(self.size));
        }
        match self.price {
            Some(p) if p <= 0 => Err(EventError::NonPositivePrice(p)),
            None if !(self.action == Action::Submit && self.kind == OrderKind::Market) => {
                Err(EventError::MissingPrice(self.action))
            }
            _ => Ok(()),
        }
    }
}

/// Best bid and best ask, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quotes {
    pub best_bid: Ticks,
    pub best_ask: Ticks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid quotes: bid {bid}, ask {ask}")]
pub struct InvalidQuotes {
    pub bid: Ticks,
    pub ask: Ticks,
}

impl Quotes {
    /// Requires `0 < bid < ask`.
    pub fn new(best_bid: Ticks, best_ask: Ticks) -> Result<Self, InvalidQuotes> {
        if best_bid <= 0 || best_ask <= best_bid {
            return Err(InvalidQuotes {
                bid: best_bid,
                ask: best_ask,
            });
        }
        Ok(Quotes { best_bid, best_ask })
    }

    pub fn midprice(&self) -> Ratio<i64> {
        midprice(*self)
    }
}

/// `(bid + ask) / 2` in ticks, exactly.
pub fn midprice(q: Quotes) -> Ratio<i64> {
    Ratio::new(q.best_bid + q.best_ask, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("sampling period must be positive, got {0} us")]
pub struct ZeroPeriod(pub Micros);

/// Midprice velocity in ticks per second over a period of `dt` microseconds.
pub fn midprice_velocity(z_prev: Ratio<i64>, z_cur: Ratio<i64>, dt: Micros) -> Result<Ratio<i64>, ZeroPeriod> {
    if dt <= 0 {
        return Err(ZeroPeriod(dt));
    }
    Ok((z_cur - z_prev) * Ratio::new(MICROS_PER_SEC, dt))
}

/// How a Match event contributes momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchAttribution {
    /// Only the aggressor, at its clamped price.
    #[default]
    AggressorOnly,
    /// The aggressor plus the resting order leaving the book, treated like a
    /// cancel of the resting side.
    BothSides,
}

/// Active-area depth, sampling period and instrument precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaConfig {
    /// Active-area depth in ticks.
    pub alpha: Ticks,
    /// Sampling period in microseconds.
    pub dt: Micros,
    pub precision: Precision,
    #[serde(default)]
    pub match_attribution: MatchAttribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("active-area depth must be positive, got {0} ticks")]
    NonPositiveAlpha(Ticks),
    #[error(transparent)]
    Period(#[from] ZeroPeriod),
}

impl AreaConfig {
    /// LUNA-like defaults: depth 0.5 USD, 0.1 s sampling.
    pub fn luna() -> Self {
        AreaConfig {
            alpha: 50,
            dt: 100_000,
            precision: Precision::LUNA_USD,
            match_attribution: MatchAttribution::AggressorOnly,
        }
    }

    /// BTC-like defaults: depth 100 USD, 0.1 s sampling.
    pub fn btc() -> Self {
        AreaConfig {
            alpha: 10_000,
            dt: 100_000,
            precision: Precision::BTC_USD,
            match_attribution: MatchAttribution::AggressorOnly,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.alpha <= 0 {
            return Err(ConfigError::NonPositiveAlpha(self.alpha));
        }
        if self.dt <= 0 {
            return Err(ZeroPeriod(self.dt).into());
        }
        Ok(())
    }

    /// Factor turning raw momentum (size-units x ticks per sampling period)
    /// into quote-currency x size per second.
    pub fn momentum_scale(&self) -> f64 {
        self.precision.tick_size.as_f64() * self.precision.size_unit.as_f64() * MICROS_PER_SEC as f64 / self.dt as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midprice_examples() {
        let q = Quotes::new(174, 175).unwrap();
        assert_eq!(midprice(q), Ratio::new(349, 2));
        assert_eq!(midprice(Quotes::new(100, 102).unwrap()), Ratio::from_integer(101));
        assert_eq!(midprice(Quotes::new(226, 228).unwrap()), Ratio::from_integer(227));
    }

    #[test]
    fn quotes_invariants() {
        assert!(Quotes::new(175, 175).is_err());
        assert!(Quotes::new(176, 175).is_err());
        assert!(Quotes::new(0, 1).is_err());
    }

    #[test]
    fn velocity_examples() {
        let z = |v| Ratio::from_integer(v);
        assert_eq!(midprice_velocity(z(100), z(100), 100_000).unwrap(), z(0));
        assert_eq!(midprice_velocity(z(100), z(101), 100_000).unwrap(), z(10));
        assert_eq!(midprice_velocity(z(101), z(100), 100_000).unwrap(), z(-10));
        assert!(midprice_velocity(z(1), z(2), 0).is_err());
    }

    #[test]
    fn event_checks() {
        assert!(Event::limit(0, "a", Action::Submit, Side::Buy, 100, 1).check().is_ok());
        assert!(Event::market(0, "a", Side::Buy, 1).check().is_ok());
        assert_eq!(
            Event::limit(0, "a", Action::Submit, Side::Buy, 100, 0).check(),
            Err(EventError::NonPositiveSize(0))
        );
        let mut cancel = Event::limit(0, "a", Action::Cancel, Side::Buy, 100, 1);
        cancel.price = None;
        assert_eq!(cancel.check(), Err(EventError::MissingPrice(Action::Cancel)));
    }

    #[test]
    fn momentum_scale_luna() {
        // 1 tick x 1 size-unit per 0.1 s = 0.01 * 0.001 / 0.1
        let s = AreaConfig::luna().momentum_scale();
        assert!((s - 1e-4).abs() < 1e-18);
    }

    proptest::proptest! {
        #[test]
        fn velocity_antisymmetric(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000, dt in 1i64..10_000_000) {
            let (za, zb) = (Ratio::new(a, 2), Ratio::new(b, 2));
            proptest::prop_assert_eq!(
                midprice_velocity(za, zb, dt).unwrap(),
                -midprice_velocity(zb, za, dt).unwrap()
            );
        }
    }
}
