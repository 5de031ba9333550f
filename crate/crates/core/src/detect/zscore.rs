//! Standard-score baseline over raw order sizes.

use serde::Serialize;

use super::DetectError;
use crate::event::Event;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScoreRecord {
    pub event: Event,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScoreRanking {
    pub mean: f64,
    pub std_dev: f64,
    /// All sizes were equal; the ranking is empty.
    pub degenerate: bool,
    pub records: Vec<ZScoreRecord>,
}

/// Ranks every record by `(size - mean) / std_dev` (population statistics)
/// and keeps the top `k`. Equal scores are ordered by timestamp, then by the
/// record's fields, so the result does not depend on input order.
pub fn zscore_baseline(stream: &[Event], k: usize) -> Result<ZScoreRanking, DetectError> {
    if stream.len() < 2 {
        return Err(DetectError::TooFewSamples(stream.len()));
    }
    if k == 0 {
        return Err(DetectError::ZeroK);
    }
    let n = stream.len() as i128;
    let sum: i128 = stream.iter().map(|e| i128::from(e.size)).sum();
    let sq: i128 = stream.iter().map(|e| i128::from(e.size).pow(2)).sum();
    let spread = n * sq - sum * sum;
    let mean = sum as f64 / n as f64;
    let std_dev = (spread as f64).sqrt() / n as f64;
    if spread == 0 {
        log::warn!("all {} order sizes are equal; z-score ranking is empty", stream.len());
        return Ok(ZScoreRanking {
            mean,
            std_dev: 0.0,
            degenerate: true,
            records: Vec::new(),
        });
    }
    let mut idx: Vec<usize> = (0..stream.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ea, eb) = (&stream[a], &stream[b]);
        eb.size
            .cmp(&ea.size)
            .then(ea.ts.cmp(&eb.ts))
            .then_with(|| ea.order_id.cmp(&eb.order_id))
            .then(ea.action.cmp(&eb.action))
            .then(ea.side.cmp(&eb.side))
            .then(ea.price.cmp(&eb.price))
    });
    let denom = (spread as f64).sqrt();
    let records = idx
        .into_iter()
        .take(k)
        .map(|i| ZScoreRecord {
            event: stream[i].clone(),
            z: (n * i128::from(stream[i].size) - sum) as f64 / denom,
        })
        .collect();
    Ok(ZScoreRanking {
        mean,
        std_dev,
        degenerate: false,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Action, Side};
    use proptest::prelude::*;

    fn sized(sizes: &[i64]) -> Vec<Event> {
        sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Event::limit(i as i64, format!("o{i}"), Action::Submit, Side::Buy, 100, s))
            .collect()
    }

    #[test]
    fn hand_computed_example() {
        let r = zscore_baseline(&sized(&[1, 2, 3, 4, 10]), 1).unwrap();
        assert_eq!(r.mean, 4.0);
        assert!((r.std_dev - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.records[0].event.size, 10);
        assert!((r.records[0].z - 6.0 / 10f64.sqrt()).abs() < 1e-12);
        assert!((r.records[0].z - 1.897).abs() < 1e-3);
    }

    #[test]
    fn equal_sizes_are_degenerate() {
        let r = zscore_baseline(&sized(&[5, 5, 5]), 3).unwrap();
        assert!(r.degenerate);
        assert!(r.records.is_empty());
        assert_eq!(zscore_baseline(&sized(&[5]), 1), Err(DetectError::TooFewSamples(1)));
    }

    proptest! {
        #[test]
        fn permutation_invariant(sizes in prop::collection::vec(1i64..50, 2..40), rot in 0usize..40, k in 1usize..10) {
            let events = sized(&sizes);
            let mut shuffled = events.clone();
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
            prop_assert_eq!(zscore_baseline(&events, k).unwrap(), zscore_baseline(&shuffled, k).unwrap());
        }
    }
}
