//! Deviation scores of a per-bucket momentum series and top-k ranking.
//!
//! For a window of `n` values with sum `S` and sum of squares `Q`, the
//! population z-score of `x` is `(n*x - S) / sqrt(n*Q - S^2)`. The numerator
//! is kept as an exact integer so ranking inside one window never depends on
//! floating-point rounding.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::momentum::{MomentumSample, RawMomentum};
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationScore {
    pub bucket_end: Micros,
    pub net_momentum: RawMomentum,
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// One mean and deviation over the whole series.
    #[default]
    Whole,
    /// Trailing window of `n` samples ending at (and including) each sample.
    Rolling(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    /// Largest `|deviation|` first; catches both the jump and the bounce-back.
    #[default]
    Absolute,
    /// Largest positive deviation first.
    Signed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviations {
    pub scores: Vec<DeviationScore>,
    /// Windows whose standard deviation was zero (their scores are 0).
    pub degenerate_windows: usize,
    /// Exact `n*x - S` per score for the whole-series window.
    centered: Option<Vec<i128>>,
}

impl Deviations {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_windows > 0
    }
}

struct Moments {
    n: i128,
    sum: i128,
    spread: i128,
}

/// Exact `n`, `S` and `n*Q - S^2`; `None` on overflow.
fn moments(values: &[i128]) -> Option<Moments> {
    let n = values.len() as i128;
    let mut sum: i128 = 0;
    let mut sq: i128 = 0;
    for &v in values {
        sum = sum.checked_add(v)?;
        sq = sq.checked_add(v.checked_mul(v)?)?;
    }
    let spread = n.checked_mul(sq)?.checked_sub(sum.checked_mul(sum)?)?;
    Some(Moments { n, sum, spread })
}

/// Two-pass floating fallback for series whose exact moments overflow.
fn float_scores(values: &[i128]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn centre(m: &Moments, x: i128) -> Option<i128> {
    m.n.checked_mul(x)?.checked_sub(m.sum)
}

fn all_equal(values: &[i128]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Deviation of `x` inside `window`, and whether the window was degenerate.
fn score_in(window: &[i128], x: i128) -> (f64, bool) {
    if all_equal(window) {
        return (0.0, true);
    }
    if let Some((m, c)) = moments(window).and_then(|m| centre(&m, x).map(|c| (m, c))) {
        return (c as f64 / (m.spread as f64).sqrt(), false);
    }
    let (mean, sd) = float_scores(window);
    ((x as f64 - mean) / sd, false)
}

/// Scores every sample's `m_total` against its window.
pub fn deviation_scores(samples: &[MomentumSample], window: Window) -> Result<Deviations, DetectError> {
    if samples.len() < 2 {
        return Err(DetectError::TooFewSamples(samples.len()));
    }
    let values: Vec<i128> = samples.iter().map(|s| s.m_total).collect();
    let mut scores = Vec::with_capacity(samples.len());
    match window {
        Window::Whole => {
            let degenerate = all_equal(&values);
            let exact = if degenerate { None } else { moments(&values) };
            let centered: Option<Vec<i128>> = if degenerate {
                Some(vec![0; values.len()])
            } else {
                exact
                    .as_ref()
                    .and_then(|m| values.iter().map(|&x| centre(m, x)).collect())
            };
            let fallback = float_scores(&values);
            for (i, (s, &x)) in samples.iter().zip(&values).enumerate() {
                let deviation = match (&exact, &centered) {
                    _ if degenerate => 0.0,
                    (Some(m), Some(c)) => c[i] as f64 / (m.spread as f64).sqrt(),
                    _ => (x as f64 - fallback.0) / fallback.1,
                };
                scores.push(DeviationScore {
                    bucket_end: s.bucket_end,
                    net_momentum: x,
                    deviation,
                });
            }
            Ok(Deviations {
                scores,
                degenerate_windows: usize::from(degenerate),
                centered,
            })
        }
        Window::Rolling(n) => {
            if n == 0 {
                return Err(DetectError::EmptyWindow);
            }
            let mut degenerate_windows = 0;
            for (i, s) in samples.iter().enumerate() {
                let lo = (i + 1).saturating_sub(n);
                let (deviation, degenerate) = score_in(&values[lo..=i], values[i]);
                degenerate_windows += usize::from(degenerate);
                scores.push(DeviationScore {
                    bucket_end: s.bucket_end,
                    net_momentum: values[i],
                    deviation,
                });
            }
            Ok(Deviations {
                scores,
                degenerate_windows,
                centered: None,
            })
        }
    }
}

fn key_order(a: (f64, Option<i128>), b: (f64, Option<i128>), ranking: Ranking) -> Ordering {
    match (a.1, b.1) {
        (Some(x), Some(y)) => match ranking {
            Ranking::Absolute => x.unsigned_abs().cmp(&y.unsigned_abs()),
            Ranking::Signed => x.cmp(&y),
        },
        _ => match ranking {
            Ranking::Absolute => a.0.abs().total_cmp(&b.0.abs()),
            Ranking::Signed => a.0.total_cmp(&b.0),
        },
    }
}

/// The `k` strongest scores, ties broken by earlier bucket. `k` larger than
/// the series returns all of it.
pub fn top_k(dev: &Deviations, k: usize, ranking: Ranking) -> Result<Vec<DeviationScore>, DetectError> {
    if k == 0 {
        return Err(DetectError::ZeroK);
    }
    let key = |i: usize| (dev.scores[i].deviation, dev.centered.as_ref().map(|c| c[i]));
    let mut idx: Vec<usize> = (0..dev.scores.len()).collect();
    idx.sort_by(|&a, &b| {
        key_order(key(b), key(a), ranking).then(dev.scores[a].bucket_end.cmp(&dev.scores[b].bucket_end))
    });
    Ok(idx.into_iter().take(k).map(|i| dev.scores[i]).collect())
}

/// Top-k scores that also clear the deviation floor.
pub fn anomalies(
    dev: &Deviations,
    k: usize,
    ranking: Ranking,
    threshold: f64,
) -> Result<Vec<DeviationScore>, DetectError> {
    let passes = |d: f64| match ranking {
        Ranking::Absolute => d.abs() >= threshold,
        Ranking::Signed => d >= threshold,
    };
    Ok(top_k(dev, k, ranking)?
        .into_iter()
        .filter(|s| passes(s.deviation))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::Area;
    use proptest::prelude::*;

    fn samples(values: &[i128]) -> Vec<MomentumSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| MomentumSample {
                bucket_end: i as i64 * 100_000,
                area: Area::Passive,
                m_limit: v,
                m_market: 0,
                m_total: v,
            })
            .collect()
    }

    #[test]
    fn hand_computed_population_scores() {
        let d = deviation_scores(&samples(&[0, 0, 0, 0, 10]), Window::Whole).unwrap();
        let got: Vec<f64> = d.scores.iter().map(|s| s.deviation).collect();
        assert_eq!(got, vec![-0.5, -0.5, -0.5, -0.5, 2.0]);
        assert!(!d.is_degenerate());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let d = deviation_scores(&samples(&[7, 7, 7]), Window::Whole).unwrap();
        assert!(d.scores.iter().all(|s| s.deviation == 0.0));
        assert!(d.is_degenerate());
        assert_eq!(
            deviation_scores(&samples(&[1]), Window::Whole),
            Err(DetectError::TooFewSamples(1))
        );
        assert_eq!(
            deviation_scores(&samples(&[1, 2]), Window::Rolling(0)),
            Err(DetectError::EmptyWindow)
        );
    }

    #[test]
    fn top_k_examples() {
        // deviations of [1, 50, 2] rank the middle one first
        let d = deviation_scores(&samples(&[1, 50, 2]), Window::Whole).unwrap();
        assert_eq!(top_k(&d, 1, Ranking::Absolute).unwrap()[0].net_momentum, 50);
        let two = deviation_scores(&samples(&[1, 2]), Window::Whole).unwrap();
        assert_eq!(top_k(&two, 3, Ranking::Absolute).unwrap().len(), 2);
        assert_eq!(top_k(&two, 0, Ranking::Absolute), Err(DetectError::ZeroK));
    }

    #[test]
    fn ties_go_to_earlier_bucket() {
        // 0 and 10 are equally far from the mean 5
        let d = deviation_scores(&samples(&[5, 10, 5, 0, 5]), Window::Whole).unwrap();
        let top = top_k(&d, 2, Ranking::Absolute).unwrap();
        assert_eq!((top[0].net_momentum, top[1].net_momentum), (10, 0));
        let signed = top_k(&d, 1, Ranking::Signed).unwrap();
        assert_eq!(signed[0].net_momentum, 10);
    }

    #[test]
    fn rolling_window_is_trailing() {
        let d = deviation_scores(&samples(&[0, 0, 0, 0, 10]), Window::Rolling(5)).unwrap();
        assert_eq!(d.scores[4].deviation, 2.0);
        // the first window holds a single sample
        assert_eq!(d.scores[0].deviation, 0.0);
        assert!(d.degenerate_windows >= 1);
    }

    #[test]
    fn overflowing_moments_fall_back_to_floats() {
        let big = i128::MAX / 4;
        let d = deviation_scores(&samples(&[big, -big, big, -big]), Window::Whole).unwrap();
        assert!(d.scores.iter().all(|s| (s.deviation.abs() - 1.0).abs() < 1e-9));
    }

    fn ranking(values: &[i128], r: Ranking) -> Vec<i64> {
        let d = deviation_scores(&samples(values), Window::Whole).unwrap();
        top_k(&d, values.len(), r)
            .unwrap()
            .iter()
            .map(|s| s.bucket_end)
            .collect()
    }

    proptest! {
        #[test]
        fn ranking_is_affine_invariant(
            values in prop::collection::vec(-1_000_000i128..1_000_000, 2..60),
            shift in -1_000_000_000i128..1_000_000_000,
            scale in 1i128..10_000,
        ) {
            let moved: Vec<i128> = values.iter().map(|v| v * scale + shift).collect();
            prop_assert_eq!(ranking(&values, Ranking::Absolute), ranking(&moved, Ranking::Absolute));
            prop_assert_eq!(ranking(&values, Ranking::Signed), ranking(&moved, Ranking::Signed));
        }

        #[test]
        fn scores_match_float_reference(values in prop::collection::vec(-1_000_000i128..1_000_000, 2..60)) {
            let d = deviation_scores(&samples(&values), Window::Whole).unwrap();
            let (mean, sd) = float_scores(&values);
            for (s, &v) in d.scores.iter().zip(&values) {
                let want = if sd == 0.0 { 0.0 } else { (v as f64 - mean) / sd };
                prop_assert!((s.deviation - want).abs() < 1e-9 * (1.0 + want.abs()));
                prop_assert!(s.deviation.is_finite());
            }
        }
    }
}
