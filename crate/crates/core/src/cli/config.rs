//! Run configuration: command-line flags over an optional TOML file over
//! built-in defaults.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::book::ReplayMode;
use crate::detect::{DetectConfig, Ranking, Window, DEFAULT_K, DEFAULT_THRESHOLD};
use crate::event::{AreaConfig, MatchAttribution, Quotes};
use crate::ingest::{InputFormat, ParseOptions};
use crate::momentum::Area;
use crate::precision::{Precision, UnitScale};
use crate::time::{epoch_date, Micros, MICROS_PER_SEC};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LOBM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "lobm-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Instrument {
    #[default]
    Luna,
    Btc,
}

impl Instrument {
    pub fn precision(self) -> Precision {
        match self {
            Instrument::Luna => Precision::LUNA_USD,
            Instrument::Btc => Precision::BTC_USD,
        }
    }

    /// Default active-area depth in quote currency.
    pub fn default_alpha(self) -> &'static str {
        match self {
            Instrument::Luna => "0.5",
            Instrument::Btc => "100",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AreaSelection {
    Active,
    Passive,
    Both,
}

impl AreaSelection {
    pub fn areas(self) -> &'static [Area] {
        match self {
            AreaSelection::Active => &[Area::Active],
            AreaSelection::Passive => &[Area::Passive],
            AreaSelection::Both => &[Area::Active, Area::Passive],
        }
    }
}

/// Plot layout: one total row, or separate limit and market rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    Combined,
    #[default]
    Separated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    #[default]
    MomentumDeviation,
    Zscore,
    Both,
}

/// Overrides for generated background streams.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundOverrides {
    pub duration_s: Option<f64>,
    pub event_rate: Option<f64>,
    pub cancel_fraction: Option<f64>,
    pub active_fraction: Option<f64>,
    pub passive_share: Option<f64>,
    pub market_fraction: Option<f64>,
    pub quote_moves_per_s: Option<f64>,
    pub max_excursion_ticks: Option<i64>,
    pub mean_lifetime_s: Option<f64>,
    pub start: Option<String>,
    /// Hold the base quotes over `[pin_from, pin_to]`.
    pub pin_from: Option<String>,
    pub pin_to: Option<String>,
}

/// Everything a TOML config file may set. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<InputFormat>,
    pub instrument: Option<Instrument>,
    pub tick_size: Option<String>,
    pub size_unit: Option<String>,
    pub alpha: Option<String>,
    pub dt: Option<f64>,
    pub area: Option<AreaSelection>,
    pub split: Option<SplitMode>,
    pub detector: Option<Detector>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub rolling_window: Option<usize>,
    pub ranking: Option<Ranking>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub initial_quotes: Option<String>,
    pub match_attribution: Option<MatchAttribution>,
    pub base_date: Option<NaiveDate>,
    pub strict: Option<bool>,
    #[serde(default)]
    pub background: BackgroundOverrides,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fills every unset key of `self` from `lower`.
    pub fn or(self, lower: FileConfig) -> FileConfig {
        FileConfig {
            format: self.format.or(lower.format),
            instrument: self.instrument.or(lower.instrument),
            tick_size: self.tick_size.or(lower.tick_size),
            size_unit: self.size_unit.or(lower.size_unit),
            alpha: self.alpha.or(lower.alpha),
            dt: self.dt.or(lower.dt),
            area: self.area.or(lower.area),
            split: self.split.or(lower.split),
            detector: self.detector.or(lower.detector),
            k: self.k.or(lower.k),
            threshold: self.threshold.or(lower.threshold),
            rolling_window: self.rolling_window.or(lower.rolling_window),
            ranking: self.ranking.or(lower.ranking),
            out_dir: self.out_dir.or(lower.out_dir),
            seed: self.seed.or(lower.seed),
            initial_quotes: self.initial_quotes.or(lower.initial_quotes),
            match_attribution: self.match_attribution.or(lower.match_attribution),
            base_date: self.base_date.or(lower.base_date),
            strict: self.strict.or(lower.strict),
            background: BackgroundOverrides {
                duration_s: self.background.duration_s.or(lower.background.duration_s),
                event_rate: self.background.event_rate.or(lower.background.event_rate),
                cancel_fraction: self.background.cancel_fraction.or(lower.background.cancel_fraction),
                active_fraction: self.background.active_fraction.or(lower.background.active_fraction),
                passive_share: self.background.passive_share.or(lower.background.passive_share),
                market_fraction: self.background.market_fraction.or(lower.background.market_fraction),
                quote_moves_per_s: self.background.quote_moves_per_s.or(lower.background.quote_moves_per_s),
                max_excursion_ticks: self
                    .background
                    .max_excursion_ticks
                    .or(lower.background.max_excursion_ticks),
                mean_lifetime_s: self.background.mean_lifetime_s.or(lower.background.mean_lifetime_s),
                start: self.background.start.or(lower.background.start),
                pin_from: self.background.pin_from.or(lower.background.pin_from),
                pin_to: self.background.pin_to.or(lower.background.pin_to),
            },
        }
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    /// `None` picks a canonical format from each file name.
    pub format: Option<InputFormat>,
    pub instrument: Instrument,
    pub area_cfg: AreaConfig,
    pub base_date: NaiveDate,
    pub area: Option<AreaSelection>,
    pub split: SplitMode,
    pub detector: Detector,
    pub k: usize,
    pub threshold: f64,
    pub window: Window,
    pub ranking: Ranking,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub initial_quotes: Option<Quotes>,
    /// Reject the run on any malformed record or inconsistent event.
    pub strict: bool,
    pub background: BackgroundOverrides,
}

fn parse_quotes(text: &str, precision: &Precision) -> Result<Quotes, CliError> {
    let bad = || CliError::Usage(format!("initial quotes `{text}`: expected BID/ASK, e.g. 1.74/1.75"));
    let (bid, ask) = text.split_once('/').ok_or_else(bad)?;
    let bid = precision.price_ticks(bid.trim()).map_err(|_| bad())?;
    let ask = precision.price_ticks(ask.trim()).map_err(|_| bad())?;
    Quotes::new(bid, ask).map_err(|e| CliError::Usage(e.to_string()))
}

fn dt_micros(dt: f64) -> Result<Micros, CliError> {
    let us = (dt * MICROS_PER_SEC as f64).round();
    if !(1.0..1e15).contains(&us) {
        return Err(CliError::Usage(format!(
            "sampling period {dt} s must be at least 1 microsecond"
        )));
    }
    Ok(us as Micros)
}

impl RunConfig {
    /// Resolves merged file/flag settings against the built-in defaults.
    pub fn resolve(inputs: Vec<PathBuf>, merged: FileConfig) -> Result<Self, CliError> {
        let instrument = merged.instrument.unwrap_or_default();
        let mut precision = instrument.precision();
        if let Some(t) = &merged.tick_size {
            precision.tick_size = t
                .parse::<UnitScale>()
                .map_err(|e| CliError::Usage(format!("tick size `{t}`: {e}")))?;
        }
        if let Some(u) = &merged.size_unit {
            precision.size_unit = u
                .parse::<UnitScale>()
                .map_err(|e| CliError::Usage(format!("size unit `{u}`: {e}")))?;
        }
        let alpha_text = merged.alpha.as_deref().unwrap_or(instrument.default_alpha());
        let alpha = precision
            .price_ticks(alpha_text)
            .map_err(|e| CliError::Usage(format!("alpha `{alpha_text}`: {e}")))?;
        let area_cfg = AreaConfig {
            alpha,
            dt: dt_micros(merged.dt.unwrap_or(0.1))?,
            precision,
            match_attribution: merged.match_attribution.unwrap_or_default(),
        };
        area_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let k = merged.k.unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        let window = match merged.rolling_window {
            None => Window::Whole,
            Some(0) => return Err(CliError::Usage("rolling window must be at least 1".into())),
            Some(n) => Window::Rolling(n),
        };
        let out_dir = merged
            .out_dir
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let initial_quotes = merged
            .initial_quotes
            .as_deref()
            .map(|q| parse_quotes(q, &precision))
            .transpose()?;
        Ok(RunConfig {
            inputs,
            format: merged.format,
            instrument,
            area_cfg,
            base_date: merged.base_date.unwrap_or_else(epoch_date),
            area: merged.area,
            split: merged.split.unwrap_or_default(),
            detector: merged.detector.unwrap_or_default(),
            k,
            threshold: merged.threshold.unwrap_or(DEFAULT_THRESHOLD),
            window,
            ranking: merged.ranking.unwrap_or_default(),
            out_dir,
            seed: merged.seed.unwrap_or(0),
            initial_quotes,
            strict: merged.strict.unwrap_or(false),
            background: merged.background,
        })
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            precision: self.area_cfg.precision,
            base_date: self.base_date,
        }
    }

    pub fn replay_mode(&self) -> ReplayMode {
        if self.strict {
            ReplayMode::Strict
        } else {
            ReplayMode::Lenient
        }
    }

    pub fn detect_config(&self, area: Area) -> DetectConfig {
        DetectConfig {
            area,
            window: self.window,
            ranking: self.ranking,
            k: self.k,
            threshold: self.threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_luna() {
        let cfg = RunConfig::resolve(vec![], FileConfig::default()).unwrap();
        assert_eq!(cfg.area_cfg, AreaConfig::luna());
        assert_eq!((cfg.k, cfg.threshold), (10, 5.0));
        assert_eq!(cfg.window, Window::Whole);
    }

    #[test]
    fn btc_alpha_is_one_hundred_dollars() {
        let file = FileConfig {
            instrument: Some(Instrument::Btc),
            ..FileConfig::default()
        };
        let cfg = RunConfig::resolve(vec![], file).unwrap();
        assert_eq!(cfg.area_cfg.alpha, 10_000);
        assert_eq!(cfg.area_cfg.precision, Precision::BTC_USD);
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            r#"
            alpha = "0.3"
            k = 4
            initial_quotes = "1.74/1.75"
            [background]
            event_rate = 5.0
            "#,
        )
        .unwrap();
        let flags = FileConfig {
            k: Some(2),
            ..FileConfig::default()
        };
        let cfg = RunConfig::resolve(vec![], flags.or(file)).unwrap();
        assert_eq!((cfg.k, cfg.area_cfg.alpha), (2, 30));
        assert_eq!(cfg.initial_quotes, Some(Quotes::new(174, 175).unwrap()));
        assert_eq!(cfg.background.event_rate, Some(5.0));
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for file in [
            FileConfig {
                alpha: Some("0.001".into()),
                ..FileConfig::default()
            },
            FileConfig {
                dt: Some(0.0),
                ..FileConfig::default()
            },
            FileConfig {
                initial_quotes: Some("1.75/1.74".into()),
                ..FileConfig::default()
            },
            FileConfig {
                k: Some(0),
                ..FileConfig::default()
            },
        ] {
            assert!(matches!(RunConfig::resolve(vec![], file), Err(CliError::Usage(_))));
        }
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
    }
}
