//! The `lobm` command line: argument parsing, configuration layering and
//! exit codes. Each subcommand is a batch job writing files into the output
//! directory.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or
//! malformed input, 3 a failed internal check (replay, momentum, detection or
//! output).

mod commands;
mod config;
mod plot;

use std::ffi::OsString;
use std::io;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    analyze_events, background_params, cmd_analyze, cmd_compare, cmd_detect, cmd_generate, cmd_inject, cmd_validate,
    comparison_csv, load_inputs, momentum_csv, order_type, traced_csv, zscore_csv, Analysis, Loaded, Outcome,
};
pub use config::{
    AreaSelection, BackgroundOverrides, Detector, FileConfig, Instrument, RunConfig, SplitMode, DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
};
pub use plot::{render as render_svg, Chart, Row};

use crate::book::BookError;
use crate::detect::{DetectError, Ranking};
use crate::event::MatchAttribution;
use crate::ingest::{IngestError, InputFormat};
use crate::momentum::MomentumError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] IngestError),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("replay failed: {0}")]
    Replay(#[from] BookError),
    #[error("momentum failed: {0}")]
    Momentum(#[from] MomentumError),
    #[error("detection failed: {0}")]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Synth(
                SynthError::InvalidParams(_) | SynthError::InvalidSpec(_) | SynthError::OutsideSpan { .. },
            ) => 1,
            CliError::Input(_) | CliError::Parse(_) => 2,
            CliError::Replay(_)
            | CliError::Momentum(_)
            | CliError::Detect(_)
            | CliError::Synth(_)
            | CliError::Output { .. } => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "lobm",
    version,
    about = "Price-momentum analytics and spoofing detection for Level-3 order book streams"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| "expected canonical-csv, canonical-jsonl or exchange-jsonl".to_owned())
}

fn parse_attribution(s: &str) -> Result<MatchAttribution, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| "expected aggressor-only or both-sides".to_owned())
}

fn parse_ranking(s: &str) -> Result<Ranking, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| "expected absolute or signed".to_owned())
}

/// Settings shared by every subcommand. Each overrides the `--config` file.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML file with default settings
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Input format; inferred from the file name when omitted
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<InputFormat>,
    #[arg(long, global = true, value_enum)]
    pub instrument: Option<Instrument>,
    /// Price tick, e.g. 0.01
    #[arg(long, global = true)]
    pub tick_size: Option<String>,
    /// Size unit, e.g. 0.001
    #[arg(long, global = true)]
    pub size_unit: Option<String>,
    /// Active-area depth in quote currency
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Sampling period in seconds
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Output directory (default: $LOBM_OUT_DIR, then ./lobm-out)
    #[arg(long, short = 'o', global = true)]
    pub out_dir: Option<PathBuf>,
    /// Date for time-only timestamps
    #[arg(long, global = true)]
    pub base_date: Option<NaiveDate>,
    /// Quotes before the first event, as BID/ASK
    #[arg(long, global = true, value_name = "BID/ASK")]
    pub initial_quotes: Option<String>,
    /// Fail on malformed records and on events referencing unknown orders
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, value_parser = parse_attribution)]
    pub match_attribution: Option<MatchAttribution>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (-v info, -vv debug)
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Args, Debug, Default)]
pub struct DetectArgs {
    #[arg(long, value_enum)]
    pub area: Option<AreaSelection>,
    /// Number of anomalous buckets reported
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Minimum |deviation| of a reported bucket
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Trailing window length in samples; the whole series when omitted
    #[arg(long)]
    pub rolling_window: Option<usize>,
    #[arg(long, value_parser = parse_ranking)]
    pub ranking: Option<Ranking>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-bucket and cumulative momentum series with plots
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        area: Option<AreaSelection>,
        #[arg(long, value_enum)]
        split: Option<SplitMode>,
    },
    /// Rank anomalous buckets and trace them to orders
    Detect {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        detector: Option<Detector>,
        #[command(flatten)]
        opts: DetectArgs,
    },
    /// Insert a spoofing pattern into a stream
    Inject {
        input: PathBuf,
        /// Spoof description (TOML, or JSON by extension)
        #[arg(long)]
        spec: PathBuf,
        /// Output file name inside the output directory
        #[arg(long, default_value = "injected.csv")]
        output: String,
    },
    /// Generate a synthetic background stream
    Generate {
        /// Stream length in seconds
        #[arg(long)]
        duration: Option<f64>,
        /// Mean events per second
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value = "background.csv")]
        output: String,
    },
    /// Parse a stream and report counts and inconsistencies
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Side-by-side momentum and z-score rankings
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: DetectArgs,
    },
}

fn flag_layer(common: &CommonArgs) -> FileConfig {
    FileConfig {
        format: common.format,
        instrument: common.instrument,
        tick_size: common.tick_size.clone(),
        size_unit: common.size_unit.clone(),
        alpha: common.alpha.clone(),
        dt: common.dt,
        out_dir: common.out_dir.clone(),
        seed: common.seed,
        initial_quotes: common.initial_quotes.clone(),
        match_attribution: common.match_attribution,
        base_date: common.base_date,
        strict: common.strict.then_some(true),
        ..FileConfig::default()
    }
}

fn with_detect(mut layer: FileConfig, d: &DetectArgs) -> FileConfig {
    layer.area = d.area;
    layer.k = d.k;
    layer.threshold = d.threshold;
    layer.rolling_window = d.rolling_window;
    layer.ranking = d.ranking;
    layer
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut layer = flag_layer(&cli.common);
    let (inputs, layer) = match &cli.command {
        Command::Analyze { inputs, area, split } => {
            layer.area = *area;
            layer.split = *split;
            (inputs.clone(), layer)
        }
        Command::Detect { inputs, detector, opts } => {
            layer.detector = *detector;
            (inputs.clone(), with_detect(layer, opts))
        }
        Command::Compare { inputs, opts } => (inputs.clone(), with_detect(layer, opts)),
        Command::Inject { input, .. } => (vec![input.clone()], layer),
        Command::Generate { duration, rate, .. } => {
            layer.background.duration_s = *duration;
            layer.background.event_rate = *rate;
            (Vec::new(), layer)
        }
        Command::Validate { inputs } => (inputs.clone(), layer),
    };
    let cfg = RunConfig::resolve(inputs, layer.or(file))?;
    match &cli.command {
        Command::Analyze { .. } => cmd_analyze(&cfg),
        Command::Detect { .. } => cmd_detect(&cfg),
        Command::Compare { .. } => cmd_compare(&cfg),
        Command::Inject { spec, output, .. } => cmd_inject(&cfg, spec, output),
        Command::Generate { output, .. } => cmd_generate(&cfg, output),
        Command::Validate { .. } => cmd_validate(&cfg),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(cli) {
        Ok(outcome) => {
            if !outcome.summary.is_empty() {
                println!("{}", outcome.summary);
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("lobm: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_are_reported_on_stderr() {
        for args in [&["lobm", "frobnicate"][..], &["lobm", "detect"]] {
            assert!(Cli::try_parse_from(args).unwrap_err().use_stderr());
        }
        assert!(!Cli::try_parse_from(["lobm", "--help"]).unwrap_err().use_stderr());
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Parse(String::new()).exit_code(), 2);
        assert_eq!(CliError::Replay(BookError::MissingInitialQuotes).exit_code(), 3);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "lobm",
            "detect",
            "a.csv",
            "--area",
            "both",
            "-k",
            "3",
            "--ranking",
            "signed",
            "--format",
            "exchange-jsonl",
            "--initial-quotes",
            "1.74/1.75",
        ])
        .unwrap();
        assert_eq!(cli.common.format, Some(InputFormat::ExchangeJsonl));
        match cli.command {
            Command::Detect { opts, .. } => {
                assert_eq!(opts.k, Some(3));
                assert_eq!(opts.ranking, Some(Ranking::Signed));
                assert_eq!(opts.area, Some(AreaSelection::Both));
            }
            other => panic!("{other:?}"),
        }
    }
}
