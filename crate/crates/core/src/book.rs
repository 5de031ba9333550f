//! Order book replay and sampling-period bucketing.
//!
//! Buckets are half-open intervals `(end - dt, end]` on a grid aligned to
//! multiples of `dt` since the epoch. The reference quotes of a bucket are the
//! book quotes after the last event of the previous bucket, so they stay fixed
//! for the whole interval.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::event::{Action, AreaConfig, Event, OrderKind, Quotes, Side, SizeUnits, Ticks};
use crate::time::Micros;

/// Upper bound on the number of buckets a single replay may produce.
pub const MAX_BUCKETS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("{action} of unknown order `{order_id}`")]
    UnknownOrder { order_id: String, action: Action },
    #[error("order `{0}` submitted twice")]
    DuplicateOrder(String),
    #[error("limit event for `{0}` has no price")]
    Unpriced(String),
    #[error("events are not time-sorted at index {index}")]
    NotSorted { index: usize },
    #[error("no initial reference quotes: the first bucket never shows a two-sided book")]
    MissingInitialQuotes,
    #[error("stream spans {0} sampling periods, above the limit of {MAX_BUCKETS}")]
    TooManyBuckets(u128),
}

/// Strict replay rejects references to unknown orders; lenient replay skips
/// and counts them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestingOrder {
    pub side: Side,
    pub price: Ticks,
    pub remaining: SizeUnits,
}

/// What [`BookState::apply`] did with an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Changed,
    /// Market submits do not rest on the book.
    NoBookChange,
    /// Lenient mode: unknown order reference or duplicate submit.
    Ignored,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BookState {
    orders: HashMap<String, RestingOrder>,
    bids: BTreeMap<Ticks, u32>,
    asks: BTreeMap<Ticks, u32>,
}

impl BookState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<Ticks> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Ticks> {
        self.asks.keys().next().copied()
    }

    /// Current quotes, or `None` when a side is empty or the book is crossed.
    pub fn quotes(&self) -> Option<Quotes> {
        Quotes::new(self.best_bid()?, self.best_ask()?).ok()
    }

    pub fn order(&self, order_id: &str) -> Option<&RestingOrder> {
        self.orders.get(order_id)
    }

    pub fn resting_count(&self) -> usize {
        self.orders.len()
    }

    /// Number of resting limit orders quoted at `price`, both sides.
    pub fn depth_at(&self, price: Ticks) -> u32 {
        self.bids.get(&price).copied().unwrap_or(0) + self.asks.get(&price).copied().unwrap_or(0)
    }

    /// `(price, count)` per side, ascending by price.
    pub fn depth(&self, side: Side) -> impl Iterator<Item = (Ticks, u32)> + '_ {
        self.levels(side).iter().map(|(p, c)| (*p, *c))
    }

    fn levels(&self, side: Side) -> &BTreeMap<Ticks, u32> {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    fn levels_mut(&mut self, side: Side) -> &mut BTreeMap<Ticks, u32> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    fn remove_level_entry(&mut self, side: Side, price: Ticks) {
        let levels = self.levels_mut(side);
        if let Some(c) = levels.get_mut(&price) {
            *c -= 1;
            if *c == 0 {
                levels.remove(&price);
            }
        }
    }

    /// Reduces a resting order, dropping it when nothing remains.
    fn reduce(&mut self, order_id: &str, by: SizeUnits) -> Option<()> {
        let order = self.orders.get_mut(order_id)?;
        order.remaining -= by;
        if order.remaining <= 0 {
            let RestingOrder { side, price, .. } = *order;
            self.orders.remove(order_id);
            self.remove_level_entry(side, price);
        }
        Some(())
    }

    /// Applies one event. A Match names the resting order in `order_id` and
    /// reduces it by the matched size.
    pub fn apply(&mut self, e: &Event, mode: ReplayMode) -> Result<Applied, BookError> {
        match (e.action, e.kind) {
            (Action::Submit, OrderKind::Market) => Ok(Applied::NoBookChange),
            (Action::Submit, OrderKind::Limit) => {
                let price = e.price.ok_or_else(|| BookError::Unpriced(e.order_id.clone()))?;
                if self.orders.contains_key(&e.order_id) {
                    return match mode {
                        ReplayMode::Strict => Err(BookError::DuplicateOrder(e.order_id.clone())),
                        ReplayMode::Lenient => Ok(Applied::Ignored),
                    };
                }
                self.orders.insert(
                    e.order_id.clone(),
                    RestingOrder {
                        side: e.side,
                        price,
                        remaining: e.size,
                    },
                );
                *self.levels_mut(e.side).entry(price).or_insert(0) += 1;
                Ok(Applied::Changed)
            }
            (Action::Cancel | Action::Match, _) => match self.reduce(&e.order_id, e.size) {
                Some(()) => Ok(Applied::Changed),
                None => match mode {
                    ReplayMode::Strict => Err(BookError::UnknownOrder {
                        order_id: e.order_id.clone(),
                        action: e.action,
                    }),
                    ReplayMode::Lenient => Ok(Applied::Ignored),
                },
            },
        }
    }
}

/// Functional form of [`BookState::apply`].
pub fn apply_event(mut book: BookState, e: &Event, mode: ReplayMode) -> Result<BookState, BookError> {
    book.apply(e, mode)?;
    Ok(book)
}

/// One sampling period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket<'a> {
    /// Inclusive right edge `T`; the interval is `(T - dt, T]`.
    pub end: Micros,
    /// Quotes frozen for the interval; `None` marks an unclassifiable bucket.
    pub ref_quotes: Option<Quotes>,
    /// Book quotes after the bucket's last event.
    pub close_quotes: Option<Quotes>,
    pub events: &'a [Event],
}

impl Bucket<'_> {
    pub fn is_classifiable(&self) -> bool {
        self.ref_quotes.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReplayStats {
    pub buckets: usize,
    pub empty_buckets: usize,
    pub unclassifiable_buckets: usize,
    pub ignored_events: usize,
}

#[derive(Debug, Clone)]
pub struct BucketSeries<'a> {
    pub dt: Micros,
    pub buckets: Vec<Bucket<'a>>,
    pub stats: ReplayStats,
    /// The stream the buckets slice into.
    pub stream: &'a [Event],
}

impl<'a> BucketSeries<'a> {
    /// Bucket whose interval contains `ts`.
    pub fn bucket_at(&self, ts: Micros) -> Option<&Bucket<'a>> {
        let end = bucket_end(ts, self.dt);
        let first = self.buckets.first()?.end;
        let idx = usize::try_from((end - first) / self.dt).ok()?;
        self.buckets.get(idx).filter(|b| b.end == end)
    }
}

/// Right edge of the bucket containing `ts`.
pub fn bucket_end(ts: Micros, dt: Micros) -> Micros {
    -((-ts).div_euclid(dt)) * dt
}

/// First two-sided quotes seen while replaying the first bucket.
pub fn warmup_quotes(events: &[Event], dt: Micros, mode: ReplayMode) -> Result<Option<Quotes>, BookError> {
    let Some(first) = events.first() else {
        return Ok(None);
    };
    let end = bucket_end(first.ts, dt);
    let mut book = BookState::new();
    for e in events.iter().take_while(|e| e.ts <= end) {
        book.apply(e, mode)?;
        if let Some(q) = book.quotes() {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

/// Replays a time-sorted stream and cuts it into contiguous buckets, empty
/// ones included.
///
/// Without `initial_quotes` the first bucket's reference comes from
/// [`warmup_quotes`].
pub fn bucketize<'a>(
    events: &'a [Event],
    cfg: &AreaConfig,
    initial_quotes: Option<Quotes>,
    mode: ReplayMode,
) -> Result<BucketSeries<'a>, BookError> {
    let dt = cfg.dt;
    let mut series = BucketSeries {
        dt,
        buckets: Vec::new(),
        stats: ReplayStats::default(),
        stream: events,
    };
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return Ok(series);
    };
    if let Some(index) = events.windows(2).position(|w| w[1].ts < w[0].ts) {
        return Err(BookError::NotSorted { index: index + 1 });
    }
    let first_end = bucket_end(first.ts, dt);
    let last_end = bucket_end(last.ts, dt);
    let count = ((last_end - first_end) / dt) as u128 + 1;
    if count > MAX_BUCKETS as u128 {
        return Err(BookError::TooManyBuckets(count));
    }
    let initial = match initial_quotes {
        Some(q) => q,
        None => warmup_quotes(events, dt, mode)?.ok_or(BookError::MissingInitialQuotes)?,
    };

    let mut book = BookState::new();
    let mut reference = Some(initial);
    let mut cursor = 0usize;
    series.buckets.reserve(count as usize);
    for i in 0..count as i64 {
        let end = first_end + i * dt;
        let start = cursor;
        while cursor < events.len() && events[cursor].ts <= end {
            if book.apply(&events[cursor], mode)? == Applied::Ignored {
                series.stats.ignored_events += 1;
            }
            cursor += 1;
        }
        let close = book.quotes();
        if start == cursor {
            series.stats.empty_buckets += 1;
        }
        if reference.is_none() {
            series.stats.unclassifiable_buckets += 1;
        }
        series.buckets.push(Bucket {
            end,
            ref_quotes: reference,
            close_quotes: close,
            events: &events[start..cursor],
        });
        reference = close;
    }
    series.stats.buckets = series.buckets.len();
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn submit(ts: Micros, id: &str, side: Side, price: Ticks, size: SizeUnits) -> Event {
        Event::limit(ts, id, Action::Submit, side, price, size)
    }

    #[test]
    fn single_order_book() {
        let book = apply_event(
            BookState::new(),
            &submit(0, "a", Side::Buy, 100, 10),
            ReplayMode::Strict,
        )
        .unwrap();
        assert_eq!(book.best_bid(), Some(100));
        assert_eq!(book.best_ask(), None);
        assert_eq!(book.quotes(), None);

        let cancel = Event::limit(1, "a", Action::Cancel, Side::Buy, 100, 10);
        let book = apply_event(book, &cancel, ReplayMode::Strict).unwrap();
        assert_eq!(book.best_bid(), None);
        assert_eq!(book.resting_count(), 0);
    }

    #[test]
    fn partial_match() {
        let mut book = BookState::new();
        book.apply(&submit(0, "a", Side::Buy, 100, 10), ReplayMode::Strict)
            .unwrap();
        let m = Event {
            kind: OrderKind::Market,
            ..Event::limit(1, "a", Action::Match, Side::Sell, 100, 4)
        };
        book.apply(&m, ReplayMode::Strict).unwrap();
        assert_eq!(book.best_bid(), Some(100));
        assert_eq!(book.order("a").unwrap().remaining, 6);
        assert_eq!(book.depth_at(100), 1);
    }

    #[test]
    fn unknown_cancel() {
        let cancel = Event::limit(1, "ghost", Action::Cancel, Side::Buy, 100, 10);
        let mut book = BookState::new();
        assert!(matches!(
            book.apply(&cancel, ReplayMode::Strict),
            Err(BookError::UnknownOrder { .. })
        ));
        assert_eq!(book.apply(&cancel, ReplayMode::Lenient).unwrap(), Applied::Ignored);
    }

    #[test]
    fn duplicate_submit() {
        let mut book = BookState::new();
        book.apply(&submit(0, "a", Side::Buy, 100, 1), ReplayMode::Strict)
            .unwrap();
        assert!(matches!(
            book.apply(&submit(0, "a", Side::Buy, 101, 1), ReplayMode::Strict),
            Err(BookError::DuplicateOrder(_))
        ));
    }

    #[test]
    fn grid_alignment() {
        assert_eq!(bucket_end(50_000, 100_000), 100_000);
        assert_eq!(bucket_end(100_000, 100_000), 100_000);
        assert_eq!(bucket_end(100_001, 100_000), 200_000);
        assert_eq!(bucket_end(0, 100_000), 0);
        assert_eq!(bucket_end(-1, 100_000), 0);
    }

    fn two_sided(ts: Micros) -> Vec<Event> {
        vec![submit(ts, "b", Side::Buy, 100, 1), submit(ts, "a", Side::Sell, 101, 1)]
    }

    #[test]
    fn two_events_two_buckets() {
        let cfg = AreaConfig::luna();
        let q = Quotes::new(100, 101).unwrap();
        let events = vec![
            submit(50_000, "x", Side::Buy, 90, 1),
            submit(150_000, "y", Side::Buy, 91, 1),
        ];
        let s = bucketize(&events, &cfg, Some(q), ReplayMode::Strict).unwrap();
        assert_eq!(s.buckets.len(), 2);
        assert_eq!(s.buckets[0].end, 100_000);
        assert_eq!(s.buckets[1].end, 200_000);
        assert_eq!(s.buckets[0].events.len(), 1);
        assert_eq!(s.buckets[1].events.len(), 1);
        assert_eq!(s.buckets[0].ref_quotes, Some(q));
        // the book after bucket 0 is one-sided
        assert_eq!(s.buckets[1].ref_quotes, None);
        assert_eq!(s.stats.unclassifiable_buckets, 1);
    }

    #[test]
    fn empty_stream() {
        let s = bucketize(&[], &AreaConfig::luna(), None, ReplayMode::Strict).unwrap();
        assert!(s.buckets.is_empty());
    }

    #[test]
    fn single_bucket_uses_initial_quotes() {
        let q = Quotes::new(95, 105).unwrap();
        let mut events = two_sided(10_000);
        events.push(submit(90_000, "c", Side::Buy, 99, 1));
        let s = bucketize(&events, &AreaConfig::luna(), Some(q), ReplayMode::Strict).unwrap();
        assert_eq!(s.buckets.len(), 1);
        assert_eq!(s.buckets[0].ref_quotes, Some(q));
        assert_eq!(s.buckets[0].close_quotes, Some(Quotes::new(100, 101).unwrap()));
    }

    #[test]
    fn warmup_and_missing_quotes() {
        let cfg = AreaConfig::luna();
        let events = two_sided(10_000);
        let s = bucketize(&events, &cfg, None, ReplayMode::Strict).unwrap();
        assert_eq!(s.buckets[0].ref_quotes, Some(Quotes::new(100, 101).unwrap()));

        let one_sided = vec![submit(10_000, "b", Side::Buy, 100, 1)];
        assert_eq!(
            bucketize(&one_sided, &cfg, None, ReplayMode::Strict).unwrap_err(),
            BookError::MissingInitialQuotes
        );
    }

    #[test]
    fn empty_buckets_carry_reference() {
        let cfg = AreaConfig::luna();
        let mut events = two_sided(10_000);
        events.push(submit(450_000, "c", Side::Buy, 99, 1));
        let s = bucketize(&events, &cfg, None, ReplayMode::Strict).unwrap();
        assert_eq!(s.buckets.len(), 5);
        assert_eq!(s.stats.empty_buckets, 3);
        let q = Some(Quotes::new(100, 101).unwrap());
        assert!(s.buckets[1..].iter().all(|b| b.ref_quotes == q));
        assert_eq!(s.bucket_at(450_000).unwrap().end, 500_000);
        assert_eq!(s.bucket_at(300_000).unwrap().events.len(), 0);
    }

    #[test]
    fn unsorted_rejected() {
        let events = vec![submit(200, "a", Side::Buy, 1, 1), submit(100, "b", Side::Buy, 1, 1)];
        assert_eq!(
            bucketize(&events, &AreaConfig::luna(), None, ReplayMode::Strict).unwrap_err(),
            BookError::NotSorted { index: 1 }
        );
    }

    /// Naive book: a flat list scanned on every query.
    #[derive(Default)]
    struct NaiveBook(Vec<(String, Side, Ticks, SizeUnits)>);

    impl NaiveBook {
        fn replay(events: &[Event]) -> Self {
            let mut b = NaiveBook::default();
            for e in events {
                match (e.action, e.kind) {
                    (Action::Submit, OrderKind::Limit) => {
                        if !b.0.iter().any(|o| o.0 == e.order_id) {
                            b.0.push((e.order_id.clone(), e.side, e.price.unwrap(), e.size));
                        }
                    }
                    (Action::Submit, OrderKind::Market) => {}
                    _ => {
                        if let Some(i) = b.0.iter().position(|o| o.0 == e.order_id) {
                            b.0[i].3 -= e.size;
                            if b.0[i].3 <= 0 {
                                b.0.remove(i);
                            }
                        }
                    }
                }
            }
            b
        }

        fn best(&self, side: Side) -> Option<Ticks> {
            let prices = self.0.iter().filter(|o| o.1 == side).map(|o| o.2);
            match side {
                Side::Buy => prices.max(),
                Side::Sell => prices.min(),
            }
        }
    }

    fn arb_stream() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec((0u8..4, 0usize..12, any::<bool>(), 90i64..110, 1i64..20), 0..80).prop_map(|ops| {
            ops.into_iter()
                .enumerate()
                .map(|(i, (op, id, buy, price, size))| {
                    let side = if buy { Side::Buy } else { Side::Sell };
                    let id = format!("o{id}");
                    let ts = i as Micros * 1000;
                    match op {
                        0 | 1 => Event::limit(ts, id, Action::Submit, side, price, size),
                        2 => Event::limit(ts, id, Action::Cancel, side, price, size),
                        _ => Event {
                            kind: OrderKind::Market,
                            ..Event::limit(ts, id, Action::Match, side, price, size)
                        },
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn incremental_matches_rebuild(events in arb_stream()) {
            let mut book = BookState::new();
            for (k, e) in events.iter().enumerate() {
                book.apply(e, ReplayMode::Lenient).unwrap();
                let naive = NaiveBook::replay(&events[..=k]);
                prop_assert_eq!(book.best_bid(), naive.best(Side::Buy));
                prop_assert_eq!(book.best_ask(), naive.best(Side::Sell));
                prop_assert_eq!(book.resting_count(), naive.0.len());
                let depth_total: u32 = book.depth(Side::Buy).chain(book.depth(Side::Sell)).map(|(_, c)| c).sum();
                prop_assert_eq!(depth_total as usize, naive.0.len());
                // a fresh replay of the prefix lands on the same state
                let mut fresh = BookState::new();
                for e in &events[..=k] {
                    fresh.apply(e, ReplayMode::Lenient).unwrap();
                }
                prop_assert_eq!(&fresh, &book);
            }
        }

        #[test]
        fn buckets_partition_the_stream(events in arb_stream(), dt in 500i64..20_000) {
            let cfg = AreaConfig { dt, ..AreaConfig::luna() };
            let q = Quotes::new(50, 150).unwrap();
            let s = bucketize(&events, &cfg, Some(q), ReplayMode::Lenient).unwrap();
            let rejoined: Vec<Event> = s.buckets.iter().flat_map(|b| b.events.iter().cloned()).collect();
            prop_assert_eq!(rejoined, events.clone());
            for w in s.buckets.windows(2) {
                prop_assert_eq!(w[1].end - w[0].end, dt);
                prop_assert_eq!(w[1].ref_quotes, w[0].close_quotes);
            }
            for b in &s.buckets {
                prop_assert!(b.events.iter().all(|e| e.ts > b.end - dt && e.ts <= b.end));
            }
        }
    }
}
