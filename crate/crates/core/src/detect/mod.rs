//! Spoofing and layering detection.
//!
//! Spoof orders placed beyond the active area and pulled shortly after show
//! up as a jump in passive-area net momentum followed by a jump of opposite
//! sign. Buckets are scored by deviation from the series mean, the strongest
//! are traced back to their order records, and traced records sharing one
//! order size are grouped into layering candidates. A z-score ranking of raw
//! order sizes is provided as a baseline for comparison.

mod deviation;
mod trace;
mod zscore;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use deviation::{anomalies, deviation_scores, top_k, DeviationScore, Deviations, Ranking, Window};
pub use trace::{cluster_layering, trace_orders, ClusterLabel, LayeringCluster, TracedBucket, TracedEvent};
pub use zscore::{zscore_baseline, ZScoreRanking, ZScoreRecord};

use crate::book::BucketSeries;
use crate::event::AreaConfig;
use crate::momentum::{to_physical, Area, MomentumError, MomentumSeries};
use crate::time::{format_timestamp, Micros};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("rolling window must hold at least one sample")]
    EmptyWindow,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no classifiable bucket ends at {0}")]
    UnknownBucket(Micros),
    #[error("cannot trace an area other than active or passive")]
    UntraceableArea,
    #[error(transparent)]
    Momentum(#[from] MomentumError),
}

/// Default number of ranked buckets.
pub const DEFAULT_K: usize = 10;
/// Default deviation floor for a bucket to count as anomalous.
pub const DEFAULT_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub area: Area,
    pub window: Window,
    pub ranking: Ranking,
    pub k: usize,
    pub threshold: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            area: Area::Passive,
            window: Window::Whole,
            ranking: Ranking::Absolute,
            k: DEFAULT_K,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub config: DetectConfig,
    pub samples: usize,
    pub degenerate: bool,
    /// Anomalous buckets, strongest first.
    pub ranked: Vec<DeviationScore>,
    pub traced: Vec<TracedBucket>,
    pub layering_clusters: Vec<LayeringCluster>,
    pub warnings: Vec<String>,
}

impl AnomalyReport {
    fn empty(config: DetectConfig, samples: usize) -> Self {
        AnomalyReport {
            config,
            samples,
            degenerate: false,
            ranked: Vec::new(),
            traced: Vec::new(),
            layering_clusters: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Every traced record, bucket by bucket in rank order.
    pub fn traced_events(&self) -> impl Iterator<Item = &TracedEvent> {
        self.traced.iter().flat_map(|t| &t.events)
    }

    /// Human-readable form with formatted timestamps, prices and sizes.
    pub fn document(&self, cfg: &AreaConfig) -> ReportDocument {
        let p = &cfg.precision;
        let record = |t: &TracedEvent| RecordDoc {
            timestamp: format_timestamp(t.event.ts),
            order_id: t.event.order_id.clone(),
            action: t.event.action.as_str(),
            price: t.event.price.map(|x| p.format_price(x)),
            order_type: t.event.kind.as_str(),
            side: t.event.side.as_str(),
            size: p.format_size(t.event.size),
            momentum: to_physical(t.momentum, cfg),
        };
        ReportDocument {
            area: self.config.area,
            window: self.config.window,
            ranking: self.config.ranking,
            k: self.config.k,
            threshold: self.config.threshold,
            samples: self.samples,
            degenerate: self.degenerate,
            warnings: self.warnings.clone(),
            ranked: self
                .ranked
                .iter()
                .enumerate()
                .map(|(i, s)| RankedDoc {
                    rank: i + 1,
                    bucket_end: format_timestamp(s.bucket_end),
                    net_momentum: to_physical(s.net_momentum, cfg),
                    deviation: s.deviation,
                })
                .collect(),
            traced: self
                .traced
                .iter()
                .map(|t| TracedDoc {
                    bucket_end: format_timestamp(t.bucket_end),
                    deviation: t.deviation,
                    empty: t.is_empty(),
                    records: t.events.iter().map(record).collect(),
                })
                .collect(),
            layering_clusters: self
                .layering_clusters
                .iter()
                .map(|c| ClusterDoc {
                    size: p.format_size(c.size),
                    label: c.label,
                    price_levels: c.price_levels.iter().map(|&x| p.format_price(x)).collect(),
                    pairs: c.pairs,
                    order_ids: c.events.iter().map(|e| e.order_id.clone()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub area: Area,
    pub window: Window,
    pub ranking: Ranking,
    pub k: usize,
    pub threshold: f64,
    pub samples: usize,
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub ranked: Vec<RankedDoc>,
    pub traced: Vec<TracedDoc>,
    pub layering_clusters: Vec<ClusterDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedDoc {
    pub rank: usize,
    pub bucket_end: String,
    pub net_momentum: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracedDoc {
    pub bucket_end: String,
    pub deviation: f64,
    pub empty: bool,
    pub records: Vec<RecordDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordDoc {
    pub timestamp: String,
    pub order_id: String,
    pub action: &'static str,
    pub price: Option<String>,
    pub order_type: &'static str,
    pub side: &'static str,
    pub size: String,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDoc {
    pub size: String,
    pub label: ClusterLabel,
    pub price_levels: Vec<String>,
    pub pairs: usize,
    pub order_ids: Vec<String>,
}

/// Scores, ranks, traces and clusters one area of a momentum series.
///
/// A series too short to score yields an empty report with a warning.
pub fn detect(
    series: &BucketSeries<'_>,
    momentum: &MomentumSeries,
    cfg: &AreaConfig,
    dcfg: &DetectConfig,
) -> Result<AnomalyReport, DetectError> {
    if dcfg.area == Area::Outside {
        return Err(DetectError::UntraceableArea);
    }
    let samples = momentum.area(dcfg.area);
    let mut report = AnomalyReport::empty(*dcfg, samples.len());
    if samples.len() < 2 {
        report
            .warnings
            .push(format!("only {} sample(s); nothing to score", samples.len()));
        return Ok(report);
    }
    let dev = deviation_scores(samples, dcfg.window)?;
    if dev.is_degenerate() {
        let msg = format!("{} window(s) with zero standard deviation", dev.degenerate_windows);
        log::warn!("{msg}");
        report.warnings.push(msg);
        report.degenerate = true;
    }
    report.ranked = anomalies(&dev, dcfg.k, dcfg.ranking, dcfg.threshold)?;
    report.traced = trace_orders(&report.ranked, series, cfg, dcfg.area)?;
    let empty = report.traced.iter().filter(|t| t.is_empty()).count();
    if empty > 0 {
        report
            .warnings
            .push(format!("{empty} anomalous bucket(s) have no {} events", dcfg.area));
    }
    report.layering_clusters = cluster_layering(report.traced_events().map(|t| &t.event));
    Ok(report)
}

/// One line of the side-by-side detector comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub rank: usize,
    pub momentum: Option<TracedEvent>,
    pub deviation: Option<f64>,
    pub zscore: Option<ZScoreRecord>,
    /// The momentum pick also appears in the z-score top list.
    pub momentum_in_zscore: bool,
    /// The z-score pick also appears among the traced records.
    pub zscore_in_momentum: bool,
}

/// Pairs the strongest traced record of each anomalous bucket with the
/// z-score ranking, rank by rank.
pub fn compare(report: &AnomalyReport, baseline: &ZScoreRanking) -> Vec<ComparisonRow> {
    let picks: Vec<(&TracedEvent, f64)> = report
        .traced
        .iter()
        .filter_map(|t| t.events.first().map(|e| (e, t.deviation)))
        .collect();
    let n = picks.len().max(baseline.records.len());
    (0..n)
        .map(|i| {
            let m = picks.get(i);
            let z = baseline.records.get(i);
            ComparisonRow {
                rank: i + 1,
                momentum: m.map(|(e, _)| (*e).clone()),
                deviation: m.map(|(_, d)| *d),
                zscore: z.cloned(),
                momentum_in_zscore: m.is_some_and(|(e, _)| baseline.records.iter().any(|r| r.event == e.event)),
                zscore_in_momentum: z.is_some_and(|r| report.traced_events().any(|t| t.event == r.event)),
            }
        })
        .collect()
}
