//! Replays a small hand-written LUNA stream and prints per-bucket momentum
//! for the active and passive areas, then the cumulative passive series.
//!
//! ```bash
//! cargo run --example momentum_series
//! ```

use lob_momentum::book::{bucketize, ReplayMode};
use lob_momentum::ingest::{parse_lines, InputFormat, ParseOptions};
use lob_momentum::momentum::{cumulative_series, momentum_series, to_physical, Split};
use lob_momentum::time::format_time_of_day;
use lob_momentum::AreaConfig;

const STREAM: &str = "\
ts,order_id,action,side,kind,price,size
18:36:13.000000,bid,open,buy,limit,1.74,5000
18:36:13.000000,ask,open,sell,limit,1.75,5000
18:36:13.150000,a1,open,buy,limit,1.60,1200
18:36:13.220000,p1,open,buy,limit,1.10,100000
18:36:13.340000,a2,open,sell,limit,1.90,800
18:36:13.370000,ask,match,buy,market,1.75,300
18:36:13.480000,a1,cancel,buy,limit,1.60,1200
18:36:13.550000,p1,cancel,buy,limit,1.10,100000
";

fn main() {
    let cfg = AreaConfig::luna();
    let ingested = parse_lines(
        STREAM.as_bytes(),
        InputFormat::CanonicalCsv,
        &ParseOptions::new(cfg.precision),
    )
    .expect("in-memory read");
    let series = bucketize(&ingested.events, &cfg, None, ReplayMode::Strict).expect("consistent stream");
    let momentum = momentum_series(&series, &cfg, Split::Both).expect("classifiable buckets");

    println!("alpha = 0.5 USD, dt = 0.1 s; momentum in USD * LUNA / s");
    println!(
        "{:<14} {:>12} {:>12} {:>12}",
        "bucket end", "active", "passive", "events"
    );
    for ((a, p), b) in momentum.active.iter().zip(&momentum.passive).zip(&series.buckets) {
        println!(
            "{:<14} {:>12.1} {:>12.1} {:>12}",
            format_time_of_day(a.bucket_end),
            to_physical(a.m_total, &cfg),
            to_physical(p.m_total, &cfg),
            b.events.len()
        );
    }

    // the passive spike of p1 is undone by its cancel
    let cum = cumulative_series(&momentum.passive);
    let path: Vec<String> = cum
        .iter()
        .map(|c| format!("{:.0}", to_physical(c.cum_total, &cfg)))
        .collect();
    println!("cumulative passive: {}", path.join(" -> "));
}
