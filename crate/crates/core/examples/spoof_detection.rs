//! Generates an hour of LUNA-like order flow, injects a single large buy
//! order 60 cents below the bid that is pulled two minutes later, and runs
//! the deviation detector over passive-area momentum.
//!
//! ```bash
//! cargo run --release --example spoof_detection [seed]
//! ```

use lob_momentum::book::{bucketize, ReplayMode};
use lob_momentum::detect::{detect, DetectConfig};
use lob_momentum::momentum::{momentum_series, Split};
use lob_momentum::synth::{gen_background, inject_spoof, BackgroundParams, QuotePin, SpoofSpecFile, SpoofStyle};
use lob_momentum::time::{epoch_date, format_time_of_day, parse_timestamp};
use lob_momentum::{AreaConfig, Side};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = AreaConfig::luna();
    let at = |t: &str| parse_timestamp(t, epoch_date()).unwrap();

    let mut params = BackgroundParams::luna_like(seed);
    // keep 1.74/1.75 while the spoof rests
    params.pin = Some(QuotePin {
        from: at("18:36:11"),
        to: at("18:38:18"),
    });
    let background = gen_background(&params, &cfg).expect("valid preset");

    let spec = SpoofSpecFile {
        style: SpoofStyle::Traditional,
        side: Side::Buy,
        price: Some("1.14".into()),
        offset: None,
        size: "100000".into(),
        submit: "18:36.13.59".into(),
        cancel: "18:38.16.02".into(),
    }
    .resolve(&cfg.precision, epoch_date())
    .expect("valid spec");
    let injected = inject_spoof(&background, &spec, &cfg).expect("spoof fits the stream");
    println!(
        "{} background events, injected {}",
        background.len(),
        injected.order_ids().join(", ")
    );

    let series = bucketize(&injected.stream, &cfg, None, ReplayMode::Strict).unwrap();
    let momentum = momentum_series(&series, &cfg, Split::Both).unwrap();
    let report = detect(&series, &momentum, &cfg, &DetectConfig::default()).unwrap();

    println!("\nrank  bucket end      deviation");
    for (i, d) in report.ranked.iter().enumerate() {
        println!(
            "{:>4}  {}  {:>9.2}",
            i + 1,
            format_time_of_day(d.bucket_end),
            d.deviation
        );
    }
    println!("\ntraced records of the two strongest buckets:");
    for t in report.traced.iter().take(2).flat_map(|t| &t.events) {
        let e = &t.event;
        println!(
            "  {}  {:<14} {:<6} {:<4} {:>6} x {}",
            format_time_of_day(e.ts),
            e.order_id,
            e.action,
            e.side,
            cfg.precision.format_price(e.price.unwrap_or_default()),
            cfg.precision.format_size(e.size)
        );
    }
}
