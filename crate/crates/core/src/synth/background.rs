//! Seeded background order flow.
//!
//! Two anchor orders hold the best bid and ask; the quotes take a bounded
//! random walk by re-posting the anchors one tick away. All other limit
//! orders are placed in price bands that stay inside their intended area for
//! every quote the walk can reach, so the area mix of the output is decided
//! by the generator alone. Trades hit the anchors.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::event::{Action, AreaConfig, Event, OrderKind, Quotes, Side, SizeUnits, Ticks};
use crate::time::{Micros, MICROS_PER_SEC};

/// Log-normal order sizes in size units, truncated at `max` and at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    pub median: SizeUnits,
    pub sigma: f64,
    pub max: SizeUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    pub seed: u64,
    pub start: Micros,
    pub duration_s: f64,
    pub base_quotes: Quotes,
    /// Arrivals per second (limit submits and trades; cancels and quote
    /// moves come on top).
    pub event_rate: f64,
    pub sizes: SizeDistribution,
    /// Probability that a limit order is eventually canceled.
    pub cancel_fraction: f64,
    /// Probability that a limit order lands in the active area.
    pub active_fraction: f64,
    /// Share of non-active limit orders placed in the passive area; the rest
    /// go beyond it.
    pub passive_share: f64,
    /// Probability that an arrival is a trade against an anchor.
    pub market_fraction: f64,
    /// Quote moves per second.
    pub quote_moves_per_s: f64,
    /// Largest distance of the best bid from its starting value, in ticks.
    pub max_excursion: Ticks,
    pub mean_lifetime_s: f64,
    pub anchor_size: SizeUnits,
    /// Holds the quotes at `base_quotes` over an interval.
    #[serde(default)]
    pub pin: Option<QuotePin>,
}

/// Quotes return to their base values at `from` and stay there until `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotePin {
    pub from: Micros,
    pub to: Micros,
}

impl QuotePin {
    fn holds(&self, ts: Micros) -> bool {
        (self.from..=self.to).contains(&ts)
    }
}

impl BackgroundParams {
    /// LUNA-USD-like hour at 1.74/1.75 starting 18:00 on the epoch date.
    pub fn luna_like(seed: u64) -> Self {
        BackgroundParams {
            seed,
            start: 18 * 3600 * MICROS_PER_SEC,
            duration_s: 3600.0,
            base_quotes: Quotes {
                best_bid: 174,
                best_ask: 175,
            },
            event_rate: 20.0,
            sizes: SizeDistribution {
                median: 50_000,
                sigma: 1.0,
                max: 1_000_000,
            },
            cancel_fraction: 0.986,
            active_fraction: 0.97,
            passive_share: 0.53,
            market_fraction: 0.02,
            quote_moves_per_s: 0.05,
            max_excursion: 3,
            mean_lifetime_s: 5.0,
            anchor_size: 1_000_000,
            pin: None,
        }
    }

    /// BTC-USD-like hour at 41466.86/41466.88.
    pub fn btc_like(seed: u64) -> Self {
        BackgroundParams {
            base_quotes: Quotes {
                best_bid: 4_146_686,
                best_ask: 4_146_688,
            },
            sizes: SizeDistribution {
                median: 10_000,
                sigma: 1.2,
                max: 1_000_000,
            },
            max_excursion: 300,
            anchor_size: 1_000_000,
            ..Self::luna_like(seed)
        }
    }

    pub fn end(&self) -> Micros {
        self.start + (self.duration_s * MICROS_PER_SEC as f64).round() as Micros
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, cfg: &AreaConfig) -> Result<(), SynthError> {
        let invalid = |m: String| Err(SynthError::InvalidParams(m));
        for (name, p) in [
            ("cancel_fraction", self.cancel_fraction),
            ("active_fraction", self.active_fraction),
            ("passive_share", self.passive_share),
            ("market_fraction", self.market_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.event_rate > 0.0 && self.event_rate.is_finite()) {
            return invalid(format!("event_rate = {} must be positive", self.event_rate));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return invalid(format!("duration_s = {} must be non-negative", self.duration_s));
        }
        if !(self.mean_lifetime_s > 0.0) || !(self.quote_moves_per_s >= 0.0) {
            return invalid("mean_lifetime_s must be positive and quote_moves_per_s non-negative".into());
        }
        if self.sizes.median < 1 || self.sizes.max < self.sizes.median || !(self.sizes.sigma >= 0.0) {
            return invalid(format!("bad size distribution {:?}", self.sizes));
        }
        if self.pin.is_some_and(|p| p.to < p.from) {
            return invalid("quote pin ends before it starts".into());
        }
        if self.anchor_size < 2 {
            return invalid("anchor_size must be at least 2 units".into());
        }
        if self.max_excursion < 0 || cfg.alpha < 2 * self.max_excursion + 2 {
            return invalid(format!(
                "alpha ({} ticks) must be at least 2 * max_excursion + 2 ({} ticks)",
                cfg.alpha,
                2 * self.max_excursion + 2
            ));
        }
        if self.base_quotes.best_bid - self.max_excursion < 1 || self.bands(cfg).passive[0].0 < 1 {
            return invalid("quotes too close to zero for the passive area".into());
        }
        Ok(())
    }

    /// Price bands, indexed by side (buy, sell), that stay in one area for
    /// every reachable quote.
    fn bands(&self, cfg: &AreaConfig) -> Bands {
        let (b0, a0, e, a) = (
            self.base_quotes.best_bid,
            self.base_quotes.best_ask,
            self.max_excursion,
            cfg.alpha,
        );
        Bands {
            active: [(b0 + e - a, b0 - e - 1), (a0 + e + 1, a0 - e + a)],
            passive: [(b0 + e - 2 * a, b0 - e - a - 1), (a0 + e + a + 1, a0 - e + 2 * a)],
            outside: [
                ((b0 - e - 3 * a).max(1), b0 - e - 2 * a - 1),
                (a0 + e + 2 * a + 1, a0 + e + 3 * a),
            ],
        }
    }
}

struct Bands {
    active: [(Ticks, Ticks); 2],
    passive: [(Ticks, Ticks); 2],
    outside: [(Ticks, Ticks); 2],
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Buy => 0,
        Side::Sell => 1,
    }
}

struct Anchor {
    id: String,
    price: Ticks,
    remaining: SizeUnits,
}

struct Generator {
    rng: ChaCha8Rng,
    params: BackgroundParams,
    bands: Bands,
    sizes: LogNormal<f64>,
    lifetime: Exp<f64>,
    next_id: u64,
    out: Vec<Event>,
    /// Scheduled cancels as (ts, sequence, index of the submit in `out`).
    pending: BinaryHeap<Reverse<(Micros, u64, usize)>>,
    anchors: [Anchor; 2],
    offset: Ticks,
}

impl Generator {
    fn fresh_id(&mut self) -> String {
        self.next_id += 1;
        format!("bg-{}", self.next_id)
    }

    fn size(&mut self) -> SizeUnits {
        let s = self.sizes.sample(&mut self.rng).round() as SizeUnits;
        s.clamp(1, self.params.sizes.max)
    }

    fn post_anchor(&mut self, ts: Micros, side: Side, price: Ticks) {
        let id = self.fresh_id();
        let size = self.params.anchor_size;
        self.out
            .push(Event::limit(ts, id.clone(), Action::Submit, side, price, size));
        self.anchors[side_index(side)] = Anchor {
            id,
            price,
            remaining: size,
        };
    }

    fn move_anchor(&mut self, ts: Micros, side: Side, price: Ticks) {
        let old = std::mem::replace(
            &mut self.anchors[side_index(side)],
            Anchor {
                id: String::new(),
                price: 0,
                remaining: 0,
            },
        );
        self.post_anchor(ts, side, price);
        self.out
            .push(Event::limit(ts, old.id, Action::Cancel, side, old.price, old.remaining));
    }

    /// Shifts both quotes by `step` ticks, re-posting the far side first so
    /// the book never crosses.
    fn shift_quotes(&mut self, ts: Micros, step: Ticks) {
        if step == 0 {
            return;
        }
        self.offset += step;
        let (bid, ask) = (self.anchors[0].price + step, self.anchors[1].price + step);
        if step > 0 {
            self.move_anchor(ts, Side::Sell, ask);
            self.move_anchor(ts, Side::Buy, bid);
        } else {
            self.move_anchor(ts, Side::Buy, bid);
            self.move_anchor(ts, Side::Sell, ask);
        }
    }

    /// One random tick, drifting back toward the starting quotes.
    fn move_quotes(&mut self, ts: Micros) {
        let e = self.params.max_excursion;
        if e == 0 {
            return;
        }
        let up_prob = 0.5 - 0.5 * self.offset as f64 / (e as f64 + 1.0);
        let up = if self.offset >= e {
            false
        } else if self.offset <= -e {
            true
        } else {
            self.rng.random_bool(up_prob)
        };
        self.shift_quotes(ts, if up { 1 } else { -1 });
    }

    fn trade(&mut self, ts: Micros) {
        let aggressor = if self.rng.random_bool(0.5) {
            Side::Buy
        } else {
            Side::Sell
        };
        let size = self.size();
        let anchor = &mut self.anchors[side_index(aggressor.opposite())];
        let size = size.min(anchor.remaining - 1);
        if size < 1 {
            return;
        }
        anchor.remaining -= size;
        self.out.push(Event {
            ts,
            order_id: anchor.id.clone(),
            action: Action::Match,
            side: aggressor,
            kind: OrderKind::Market,
            price: Some(anchor.price),
            size,
        });
    }

    fn limit_order(&mut self, ts: Micros, end: Micros) {
        let side = if self.rng.random_bool(0.5) {
            Side::Buy
        } else {
            Side::Sell
        };
        let i = side_index(side);
        let band = if self.rng.random_bool(self.params.active_fraction) {
            self.bands.active[i]
        } else if self.rng.random_bool(self.params.passive_share) || self.bands.outside[i].1 < self.bands.outside[i].0 {
            self.bands.passive[i]
        } else {
            self.bands.outside[i]
        };
        let price = self.rng.random_range(band.0..=band.1);
        let size = self.size();
        let id = self.fresh_id();
        self.out.push(Event::limit(ts, id, Action::Submit, side, price, size));
        if self.rng.random_bool(self.params.cancel_fraction) {
            let life = self.lifetime.sample(&mut self.rng) * MICROS_PER_SEC as f64;
            let cancel_ts = (ts + life.round() as Micros).min(end);
            let seq = self.next_id;
            self.pending.push(Reverse((cancel_ts, seq, self.out.len() - 1)));
        }
    }

    fn flush_cancels(&mut self, until: Micros) {
        while let Some(&Reverse((ts, _, idx))) = self.pending.peek() {
            if ts > until {
                break;
            }
            self.pending.pop();
            let submit = &self.out[idx];
            let cancel = Event {
                ts,
                action: Action::Cancel,
                ..submit.clone()
            };
            self.out.push(cancel);
        }
    }
}

fn exp_gap(rng: &mut ChaCha8Rng, dist: Option<&Exp<f64>>) -> Micros {
    match dist {
        Some(d) => (d.sample(rng) * MICROS_PER_SEC as f64).round() as Micros,
        None => Micros::MAX / 4,
    }
}

/// Generates a time-sorted background stream. Identical parameters give
/// identical streams.
pub fn gen_background(params: &BackgroundParams, cfg: &AreaConfig) -> Result<Vec<Event>, SynthError> {
    params.validate(cfg)?;
    let sizes = LogNormal::new((params.sizes.median as f64).ln(), params.sizes.sigma)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let lifetime = Exp::new(1.0 / params.mean_lifetime_s).map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let arrivals = Exp::new(params.event_rate).map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let moves = if params.quote_moves_per_s > 0.0 {
        Some(Exp::new(params.quote_moves_per_s).map_err(|e| SynthError::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let blank = || Anchor {
        id: String::new(),
        price: 0,
        remaining: 0,
    };
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        params: *params,
        bands: params.bands(cfg),
        sizes,
        lifetime,
        next_id: 0,
        out: Vec::with_capacity((params.event_rate * params.duration_s * 2.0) as usize + 16),
        pending: BinaryHeap::new(),
        anchors: [blank(), blank()],
        offset: 0,
    };
    let (start, end) = (params.start, params.end());
    g.post_anchor(start, Side::Buy, params.base_quotes.best_bid);
    g.post_anchor(start, Side::Sell, params.base_quotes.best_ask);

    let mut next_arrival = start + exp_gap(&mut g.rng, Some(&arrivals));
    let mut next_move = start + exp_gap(&mut g.rng, moves.as_ref());
    let mut reset = params.pin.map(|p| p.from.max(start));
    loop {
        let t = next_arrival.min(next_move).min(reset.unwrap_or(Micros::MAX));
        if t > end {
            break;
        }
        g.flush_cancels(t);
        if reset == Some(t) {
            g.shift_quotes(t, -g.offset);
            reset = None;
        } else if next_move <= next_arrival {
            if !params.pin.is_some_and(|p| p.holds(t)) {
                g.move_quotes(t);
            }
            next_move = t + exp_gap(&mut g.rng, moves.as_ref());
        } else {
            if g.rng.random_bool(params.market_fraction) {
                g.trade(t);
            } else {
                g.limit_order(t, end);
            }
            next_arrival = t + exp_gap(&mut g.rng, Some(&arrivals));
        }
    }
    g.flush_cancels(end);
    Ok(g.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{bucketize, ReplayMode};
    use crate::momentum::{contributions, Area};

    fn small(seed: u64) -> BackgroundParams {
        BackgroundParams {
            duration_s: 60.0,
            ..BackgroundParams::luna_like(seed)
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = AreaConfig::luna();
        let a = gen_background(&small(7), &cfg).unwrap();
        let b = gen_background(&small(7), &cfg).unwrap();
        let c = gen_background(&small(8), &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stream_is_sorted_and_replays_strictly() {
        let cfg = AreaConfig::luna();
        let p = BackgroundParams {
            quote_moves_per_s: 2.0,
            ..small(3)
        };
        let events = gen_background(&p, &cfg).unwrap();
        assert!(events.windows(2).all(|w| w[0].ts <= w[1].ts));
        let series = bucketize(&events, &cfg, None, ReplayMode::Strict).unwrap();
        assert_eq!(series.stats.unclassifiable_buckets, 0);
        let (lo, hi) = (174 - p.max_excursion, 174 + p.max_excursion);
        for b in &series.buckets {
            let q = b.close_quotes.unwrap();
            assert!((lo..=hi).contains(&q.best_bid));
            assert_eq!(q.best_ask - q.best_bid, 1);
        }
    }

    #[test]
    fn pinned_quotes_hold_base() {
        let cfg = AreaConfig::luna();
        let start = BackgroundParams::luna_like(0).start;
        let pin = QuotePin {
            from: start + 20_000_000,
            to: start + 40_000_000,
        };
        for seed in 0..5 {
            let p = BackgroundParams {
                quote_moves_per_s: 3.0,
                pin: Some(pin),
                ..small(seed)
            };
            let events = gen_background(&p, &cfg).unwrap();
            let series = bucketize(&events, &cfg, None, ReplayMode::Strict).unwrap();
            let mut moved_outside = false;
            for b in &series.buckets {
                let q = b.close_quotes.unwrap();
                if b.end > pin.from && b.end <= pin.to {
                    assert_eq!(q, p.base_quotes, "seed {seed} bucket {}", b.end);
                } else {
                    moved_outside |= q != p.base_quotes;
                }
            }
            assert!(moved_outside);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let cfg = AreaConfig::luna();
        let bad = BackgroundParams {
            cancel_fraction: 1.5,
            ..small(1)
        };
        assert!(matches!(gen_background(&bad, &cfg), Err(SynthError::InvalidParams(_))));
        let wide = BackgroundParams {
            max_excursion: 30,
            ..small(1)
        };
        assert!(gen_background(&wide, &cfg).is_err());
        let slow = BackgroundParams {
            event_rate: 0.0,
            ..small(1)
        };
        assert!(gen_background(&slow, &cfg).is_err());
    }

    #[test]
    fn event_mix_matches_targets() {
        let cfg = AreaConfig::luna();
        let p = BackgroundParams {
            event_rate: 1000.0,
            duration_s: 110.0,
            ..BackgroundParams::luna_like(11)
        };
        let events = gen_background(&p, &cfg).unwrap();
        assert!(events.len() >= 100_000);
        let series = bucketize(&events, &cfg, None, ReplayMode::Strict).unwrap();
        let (mut active, mut priced, mut submits, mut cancels) = (0usize, 0usize, 0usize, 0usize);
        for b in &series.buckets {
            let q = b.ref_quotes.unwrap();
            for e in b.events {
                match e.action {
                    Action::Submit => submits += 1,
                    Action::Cancel => cancels += 1,
                    Action::Match => continue,
                }
                priced += 1;
                let c = contributions(e, q, &cfg).unwrap()[0].unwrap();
                active += usize::from(c.area == Area::Active);
            }
        }
        let active_share = active as f64 / priced as f64;
        let cancel_share = cancels as f64 / submits as f64;
        assert!((active_share - 0.97).abs() <= 0.01, "active share {active_share}");
        assert!((cancel_share - 0.986).abs() <= 0.01, "cancel share {cancel_share}");
    }
}
