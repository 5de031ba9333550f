//! The batch commands behind each subcommand. Every command reads its inputs,
//! writes files into the output directory, and reports what it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{AreaSelection, Detector, RunConfig, SplitMode};
use super::plot::{self, Chart, Row};
use super::CliError;
use crate::book::{bucketize, BucketSeries, ReplayStats};
use crate::detect::{compare, detect, deviation_scores, zscore_baseline, AnomalyReport, ComparisonRow, ZScoreRanking};
use crate::event::{midprice, Action, AreaConfig, Event, OrderKind};
use crate::ingest::{read_file, sort_stream, validate_stream, write_csv, write_jsonl, InputFormat, StreamReport};
use crate::momentum::{cumulative_series, momentum_series, to_physical, Area, MomentumSample, MomentumSeries, Split};
use crate::synth::{gen_background, inject_spoof, BackgroundParams, QuotePin, SpoofSpecFile};
use crate::time::{format_timestamp, parse_timestamp, Micros};

/// Files written by a command plus a short human summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn write_out(cfg: &RunConfig, name: &str, contents: impl AsRef<[u8]>, outcome: &mut Outcome) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Output {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Output {
        path: path.clone(),
        source,
    })?;
    outcome.files.push(path);
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Parsed and time-sorted events of all inputs with the combined report.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub events: Vec<Event>,
    pub report: StreamReport,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Loaded, CliError> {
    if cfg.inputs.is_empty() {
        return Err(CliError::Usage("no input files given".into()));
    }
    let opts = cfg.parse_options();
    let mut out = Loaded::default();
    for path in &cfg.inputs {
        let format = cfg.format.unwrap_or_else(|| InputFormat::from_path(path));
        let ingested = read_file(path, format, &opts)?;
        let r = &mut out.report;
        let i = ingested.report;
        r.total_records += i.total_records;
        r.accepted += i.accepted;
        r.rejected += i.rejected;
        r.parse_errors += i.parse_errors;
        let room = crate::ingest::ERROR_SAMPLES.saturating_sub(r.parse_error_samples.len());
        r.parse_error_samples
            .extend(i.parse_error_samples.into_iter().take(room));
        for (reason, n) in i.skipped {
            *r.skipped.entry(reason).or_insert(0) += n;
        }
        out.events.extend(ingested.events);
    }
    if cfg.strict && out.report.parse_errors > 0 {
        return Err(CliError::Parse(format!(
            "{} malformed record(s); first: {}",
            out.report.parse_errors,
            out.report
                .parse_error_samples
                .first()
                .map(|e| format!("line {}: {}", e.line, e.message))
                .unwrap_or_default()
        )));
    }
    let validation = validate_stream(&out.events);
    out.report.merge_validation(&validation);
    sort_stream(&mut out.events);
    Ok(out)
}

/// Replay and momentum of one stream, with the midprice of every
/// classifiable bucket.
pub struct Analysis<'a> {
    pub series: BucketSeries<'a>,
    pub momentum: MomentumSeries,
    pub midprices: Vec<f64>,
}

pub fn analyze_events<'a>(events: &'a [Event], cfg: &RunConfig) -> Result<Analysis<'a>, CliError> {
    let series = bucketize(events, &cfg.area_cfg, cfg.initial_quotes, cfg.replay_mode())?;
    let momentum = momentum_series(&series, &cfg.area_cfg, Split::Both)?;
    let tick = cfg.area_cfg.precision.tick_size.as_f64();
    let midprices = series
        .buckets
        .iter()
        .filter(|b| b.is_classifiable())
        .map(|b| {
            let q = b.close_quotes.or(b.ref_quotes).expect("classifiable bucket has quotes");
            let m = midprice(q);
            *m.numer() as f64 / *m.denom() as f64 * tick
        })
        .collect();
    Ok(Analysis {
        series,
        momentum,
        midprices,
    })
}

const MOMENTUM_HEADER: &str = "bucket_end,area,m_limit,m_market,m_total,cum_limit,cum_market,cum_total";

pub fn momentum_csv(samples: &[MomentumSample], cfg: &AreaConfig) -> String {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(MOMENTUM_HEADER);
    out.push('\n');
    for (s, c) in samples.iter().zip(cumulative_series(samples)) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_timestamp(s.bucket_end),
            s.area,
            to_physical(s.m_limit, cfg),
            to_physical(s.m_market, cfg),
            to_physical(s.m_total, cfg),
            to_physical(c.cum_limit, cfg),
            to_physical(c.cum_market, cfg),
            to_physical(c.cum_total, cfg),
        );
    }
    out
}

fn momentum_svg(area: Area, samples: &[MomentumSample], mids: &[f64], cfg: &RunConfig) -> String {
    let times: Vec<Micros> = samples.iter().map(|s| s.bucket_end).collect();
    let cum = cumulative_series(samples);
    let a = &cfg.area_cfg;
    let limit: Vec<f64> = cum.iter().map(|c| to_physical(c.cum_limit, a)).collect();
    let market: Vec<f64> = cum.iter().map(|c| to_physical(c.cum_market, a)).collect();
    let total: Vec<f64> = cum.iter().map(|c| to_physical(c.cum_total, a)).collect();
    let rows = match cfg.split {
        SplitMode::Separated => vec![
            Row {
                label: "cumulative limit",
                values: &limit,
            },
            Row {
                label: "cumulative market",
                values: &market,
            },
        ],
        SplitMode::Combined => vec![Row {
            label: "cumulative total",
            values: &total,
        }],
    };
    let title = format!("{area} area net momentum");
    plot::render(&Chart {
        title: &title,
        times: &times,
        rows,
        overlay: Some(Row {
            label: "midprice",
            values: mids,
        }),
    })
}

#[derive(Serialize)]
struct AnalysisSummary<'a> {
    events: usize,
    alpha: String,
    dt_us: Micros,
    replay: &'a ReplayStats,
    skipped_unclassifiable: usize,
    samples: usize,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let loaded = load_inputs(cfg)?;
    let mut outcome = Outcome::default();
    if loaded.events.is_empty() {
        outcome.warn("input holds no events; writing empty series");
    }
    let analysis = analyze_events(&loaded.events, cfg)?;
    for &area in cfg.area.unwrap_or(AreaSelection::Both).areas() {
        let samples = analysis.momentum.area(area);
        write_out(
            cfg,
            &format!("momentum_{area}.csv"),
            momentum_csv(samples, &cfg.area_cfg),
            &mut outcome,
        )?;
        write_out(
            cfg,
            &format!("momentum_{area}.svg"),
            momentum_svg(area, samples, &analysis.midprices, cfg),
            &mut outcome,
        )?;
    }
    let summary = AnalysisSummary {
        events: loaded.events.len(),
        alpha: cfg.area_cfg.precision.format_price(cfg.area_cfg.alpha),
        dt_us: cfg.area_cfg.dt,
        replay: &analysis.series.stats,
        skipped_unclassifiable: analysis.momentum.skipped_unclassifiable,
        samples: analysis.momentum.active.len(),
    };
    write_out(cfg, "analysis_summary.json", to_json(&summary), &mut outcome)?;
    if analysis.momentum.skipped_unclassifiable > 0 {
        outcome.warn(format!(
            "{} bucket(s) without two-sided reference quotes were skipped",
            analysis.momentum.skipped_unclassifiable
        ));
    }
    outcome.summary = format!(
        "{} events, {} buckets, {} samples per area",
        loaded.events.len(),
        analysis.series.stats.buckets,
        analysis.momentum.active.len()
    );
    Ok(outcome)
}

/// Column used for order records in traced and ranking tables.
pub fn order_type(e: &Event) -> &'static str {
    match (e.action, e.kind) {
        (Action::Submit, OrderKind::Limit) => "limit",
        (Action::Submit, OrderKind::Market) => "market",
        (Action::Cancel, _) => "cancel",
        (Action::Match, _) => "match",
    }
}

fn record_cells(e: &Event, cfg: &AreaConfig) -> String {
    format!(
        "{},{},{},{},{}",
        format_timestamp(e.ts),
        e.price.map(|p| cfg.precision.format_price(p)).unwrap_or_default(),
        order_type(e),
        e.side,
        cfg.precision.format_size(e.size)
    )
}

pub fn traced_csv(report: &AnomalyReport, cfg: &AreaConfig) -> String {
    let mut out = String::from("timestamp,price,order_type,side,size\n");
    for t in report.traced_events() {
        out.push_str(&record_cells(&t.event, cfg));
        out.push('\n');
    }
    out
}

pub fn zscore_csv(r: &ZScoreRanking, cfg: &AreaConfig) -> String {
    let mut out = String::from("rank,z,order_id,timestamp,price,order_type,side,size\n");
    for (i, rec) in r.records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            rec.z,
            rec.event.order_id,
            record_cells(&rec.event, cfg)
        );
    }
    out
}

pub fn comparison_csv(rows: &[ComparisonRow], cfg: &AreaConfig) -> String {
    let mut out = String::from(
        "rank,deviation,momentum_order_id,momentum_timestamp,momentum_price,momentum_order_type,momentum_side,momentum_size,\
         z,zscore_order_id,zscore_timestamp,zscore_price,zscore_order_type,zscore_side,zscore_size,\
         momentum_in_zscore,zscore_in_momentum\n",
    );
    let blank = ",,,,,";
    for r in rows {
        let m = r
            .momentum
            .as_ref()
            .map(|t| format!("{},{}", t.event.order_id, record_cells(&t.event, cfg)))
            .unwrap_or_else(|| blank.to_string());
        let z = r
            .zscore
            .as_ref()
            .map(|z| format!("{},{}", z.event.order_id, record_cells(&z.event, cfg)))
            .unwrap_or_else(|| blank.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rank,
            r.deviation.map(|d| d.to_string()).unwrap_or_default(),
            m,
            r.zscore.as_ref().map(|z| z.z.to_string()).unwrap_or_default(),
            z,
            r.momentum_in_zscore,
            r.zscore_in_momentum
        );
    }
    out
}

fn deviations_csv(samples: &[MomentumSample], cfg: &RunConfig) -> Result<String, CliError> {
    let mut out = String::from("bucket_end,net_momentum,deviation\n");
    if samples.len() < 2 {
        return Ok(out);
    }
    for s in deviation_scores(samples, cfg.window)?.scores {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_timestamp(s.bucket_end),
            to_physical(s.net_momentum, &cfg.area_cfg),
            s.deviation
        );
    }
    Ok(out)
}

fn detect_areas(cfg: &RunConfig) -> &'static [Area] {
    cfg.area.unwrap_or(AreaSelection::Passive).areas()
}

pub fn cmd_detect(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let loaded = load_inputs(cfg)?;
    let mut outcome = Outcome::default();
    let mut lines = Vec::new();
    if matches!(cfg.detector, Detector::MomentumDeviation | Detector::Both) {
        let analysis = analyze_events(&loaded.events, cfg)?;
        for &area in detect_areas(cfg) {
            let report = detect(
                &analysis.series,
                &analysis.momentum,
                &cfg.area_cfg,
                &cfg.detect_config(area),
            )?;
            for w in &report.warnings {
                outcome.warn(format!("{area}: {w}"));
            }
            write_out(
                cfg,
                &format!("anomaly_report_{area}.json"),
                to_json(&report.document(&cfg.area_cfg)),
                &mut outcome,
            )?;
            write_out(
                cfg,
                &format!("deviations_{area}.csv"),
                deviations_csv(analysis.momentum.area(area), cfg)?,
                &mut outcome,
            )?;
            write_out(
                cfg,
                &format!("traced_{area}.csv"),
                traced_csv(&report, &cfg.area_cfg),
                &mut outcome,
            )?;
            lines.push(format!(
                "{area}: {} anomalous bucket(s), {} traced record(s), {} layering candidate(s)",
                report.ranked.len(),
                report.traced_events().count(),
                report
                    .layering_clusters
                    .iter()
                    .filter(|c| c.label == crate::detect::ClusterLabel::LayeredCandidate)
                    .count()
            ));
        }
    }
    if matches!(cfg.detector, Detector::Zscore | Detector::Both) {
        let ranking = zscore_for(&loaded.events, cfg, &mut outcome)?;
        write_out(
            cfg,
            "zscore_ranking.csv",
            zscore_csv(&ranking, &cfg.area_cfg),
            &mut outcome,
        )?;
        lines.push(format!("zscore: {} ranked record(s)", ranking.records.len()));
    }
    outcome.summary = lines.join("\n");
    Ok(outcome)
}

fn zscore_for(events: &[Event], cfg: &RunConfig, outcome: &mut Outcome) -> Result<ZScoreRanking, CliError> {
    if events.len() < 2 {
        outcome.warn("fewer than 2 records; z-score ranking is empty");
        return Ok(ZScoreRanking {
            mean: 0.0,
            std_dev: 0.0,
            degenerate: true,
            records: Vec::new(),
        });
    }
    let r = zscore_baseline(events, cfg.k)?;
    if r.degenerate {
        outcome.warn("all order sizes are equal; z-score ranking is empty");
    }
    Ok(r)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let loaded = load_inputs(cfg)?;
    let mut outcome = Outcome::default();
    let analysis = analyze_events(&loaded.events, cfg)?;
    let ranking = zscore_for(&loaded.events, cfg, &mut outcome)?;
    let mut lines = Vec::new();
    for &area in detect_areas(cfg) {
        let report = detect(
            &analysis.series,
            &analysis.momentum,
            &cfg.area_cfg,
            &cfg.detect_config(area),
        )?;
        let rows = compare(&report, &ranking);
        let overlap = rows.iter().filter(|r| r.momentum_in_zscore).count();
        write_out(
            cfg,
            &format!("comparison_{area}.csv"),
            comparison_csv(&rows, &cfg.area_cfg),
            &mut outcome,
        )?;
        lines.push(format!(
            "{area}: {} momentum pick(s), {} z-score pick(s), {overlap} shared",
            report.traced.iter().filter(|t| !t.is_empty()).count(),
            ranking.records.len()
        ));
    }
    outcome.summary = lines.join("\n");
    Ok(outcome)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let loaded = load_inputs(cfg)?;
    let mut outcome = Outcome::default();
    write_out(cfg, "stream_report.json", to_json(&loaded.report), &mut outcome)?;
    let r = &loaded.report;
    outcome.summary = format!(
        "{} records: {} accepted, {} rejected ({} malformed), {} out of order, {} dangling cancels",
        r.total_records, r.accepted, r.rejected, r.parse_errors, r.non_monotone_ts, r.dangling_cancels
    );
    Ok(outcome)
}

fn write_stream(cfg: &RunConfig, name: &str, events: &[Event], outcome: &mut Outcome) -> Result<(), CliError> {
    let mut buf = Vec::with_capacity(64 * events.len());
    let p = &cfg.area_cfg.precision;
    if name.ends_with(".jsonl") {
        write_jsonl(&mut buf, events, p)
    } else {
        write_csv(&mut buf, events, p)
    }
    .expect("writing to memory");
    write_out(cfg, name, buf, outcome)
}

fn load_spec(path: &Path) -> Result<SpoofSpecFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|x| x == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn cmd_inject(cfg: &RunConfig, spec_path: &Path, output: &str) -> Result<Outcome, CliError> {
    let loaded = load_inputs(cfg)?;
    let spec = load_spec(spec_path)?.resolve(&cfg.area_cfg.precision, cfg.base_date)?;
    let result = inject_spoof(&loaded.events, &spec, &cfg.area_cfg)?;
    let mut outcome = Outcome::default();
    for w in &result.warnings {
        outcome.warn(w.clone());
    }
    write_stream(cfg, output, &result.stream, &mut outcome)?;
    write_out(
        cfg,
        "labels.json",
        to_json(&result.label(&cfg.area_cfg.precision)),
        &mut outcome,
    )?;
    outcome.summary = format!(
        "injected {} event(s) as {}",
        result.injected.len(),
        result.order_ids().join(", ")
    );
    Ok(outcome)
}

/// Background parameters for the configured instrument, seed and overrides.
pub fn background_params(cfg: &RunConfig) -> Result<BackgroundParams, CliError> {
    let mut p = match cfg.instrument {
        super::config::Instrument::Luna => BackgroundParams::luna_like(cfg.seed),
        super::config::Instrument::Btc => BackgroundParams::btc_like(cfg.seed),
    };
    let o = &cfg.background;
    if let Some(v) = o.duration_s {
        p.duration_s = v;
    }
    if let Some(v) = o.event_rate {
        p.event_rate = v;
    }
    if let Some(v) = o.cancel_fraction {
        p.cancel_fraction = v;
    }
    if let Some(v) = o.active_fraction {
        p.active_fraction = v;
    }
    if let Some(v) = o.passive_share {
        p.passive_share = v;
    }
    if let Some(v) = o.market_fraction {
        p.market_fraction = v;
    }
    if let Some(v) = o.quote_moves_per_s {
        p.quote_moves_per_s = v;
    }
    if let Some(v) = o.max_excursion_ticks {
        p.max_excursion = v;
    }
    if let Some(v) = o.mean_lifetime_s {
        p.mean_lifetime_s = v;
    }
    let ts = |text: &str| {
        parse_timestamp(text, cfg.base_date).map_err(|e| CliError::Usage(format!("timestamp `{text}`: {e}")))
    };
    if let Some(start) = &o.start {
        p.start = ts(start)?;
    }
    p.pin = match (&o.pin_from, &o.pin_to) {
        (None, None) => p.pin,
        (Some(from), Some(to)) => Some(QuotePin {
            from: ts(from)?,
            to: ts(to)?,
        }),
        _ => return Err(CliError::Usage("pin_from and pin_to must be given together".into())),
    };
    if let Some(q) = cfg.initial_quotes {
        p.base_quotes = q;
    }
    Ok(p)
}

pub fn cmd_generate(cfg: &RunConfig, output: &str) -> Result<Outcome, CliError> {
    let params = background_params(cfg)?;
    let events = gen_background(&params, &cfg.area_cfg)?;
    let mut outcome = Outcome::default();
    write_stream(cfg, output, &events, &mut outcome)?;
    write_out(cfg, "background_params.json", to_json(&params), &mut outcome)?;
    outcome.summary = format!("generated {} events (seed {})", events.len(), params.seed);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{DetectConfig, TracedBucket, TracedEvent};
    use crate::event::Side;

    #[test]
    fn order_type_column() {
        let submit = Event::limit(0, "a", Action::Submit, Side::Buy, 1, 1);
        let cancel = Event::limit(0, "a", Action::Cancel, Side::Buy, 1, 1);
        assert_eq!(order_type(&submit), "limit");
        assert_eq!(order_type(&cancel), "cancel");
        assert_eq!(order_type(&Event::market(0, "m", Side::Sell, 1)), "market");
    }

    #[test]
    fn traced_table_shape() {
        let cfg = AreaConfig::luna();
        let e = Event::limit(66_973_590_000, "s", Action::Submit, Side::Buy, 114, 100_000_000);
        let report = AnomalyReport {
            config: DetectConfig::default(),
            samples: 2,
            degenerate: false,
            ranked: Vec::new(),
            traced: vec![TracedBucket {
                bucket_end: 66_973_600_000,
                deviation: 9.0,
                events: vec![TracedEvent {
                    bucket_end: 66_973_600_000,
                    event: e,
                    momentum: 1,
                }],
            }],
            layering_clusters: Vec::new(),
            warnings: Vec::new(),
        };
        assert_eq!(
            traced_csv(&report, &cfg),
            "timestamp,price,order_type,side,size\n1970-01-01T18:36:13.590000Z,1.14,limit,buy,100000.000\n"
        );
    }
}
