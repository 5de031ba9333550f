//! Converts an exchange full-channel capture to canonical records and prints
//! what was kept and what was skipped.
//!
//! ```bash
//! cargo run --example exchange_feed -- crates/core/tests/fixtures/exchange_feed.jsonl
//! ```

use std::path::PathBuf;

use lob_momentum::ingest::{read_file, write_csv, InputFormat, ParseOptions};
use lob_momentum::Precision;

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/fixtures/exchange_feed.jsonl"
        ))
    });
    let opts = ParseOptions::new(Precision::LUNA_USD);
    let ingested = read_file(&path, InputFormat::ExchangeJsonl, &opts).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    write_csv(std::io::stdout().lock(), &ingested.events, &opts.precision).unwrap();
    let r = &ingested.report;
    eprintln!(
        "\n{} messages, {} events, {} malformed",
        r.total_records, r.accepted, r.parse_errors
    );
    for (kind, n) in &r.skipped {
        eprintln!("  skipped {n} x {kind}");
    }
}
