//! Checks a canonical stream for malformed lines, out-of-order timestamps
//! and cancels of orders never submitted, then replays it leniently and
//! reports what the book had to ignore.
//!
//! ```bash
//! cargo run --example validate_stream -- path/to/stream.csv
//! ```

use std::path::PathBuf;

use lob_momentum::book::{bucketize, ReplayMode};
use lob_momentum::ingest::{read_file, sort_stream, InputFormat, ParseOptions};
use lob_momentum::AreaConfig;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/luna_spoof.csv")));
    let cfg = AreaConfig::luna();
    let format = InputFormat::from_path(&path);
    let mut ingested = read_file(&path, format, &ParseOptions::new(cfg.precision)).expect("readable input");
    println!("{}", serde_json::to_string_pretty(&ingested.report).unwrap());

    let moved = sort_stream(&mut ingested.events);
    match bucketize(&ingested.events, &cfg, None, ReplayMode::Lenient) {
        Ok(series) => println!(
            "re-sorted {moved} events; {} buckets, {} unclassifiable, {} events ignored by the book",
            series.stats.buckets, series.stats.unclassifiable_buckets, series.stats.ignored_events
        ),
        Err(e) => println!("replay failed: {e}"),
    }
}
