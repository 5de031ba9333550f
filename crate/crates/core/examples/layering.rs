//! Layered spoofing: four equal buy orders stepped 8 cents apart, then pulled
//! together. Traced records are grouped by order size to expose the layers.
//!
//! ```bash
//! cargo run --release --example layering
//! ```

use lob_momentum::book::{bucketize, ReplayMode};
use lob_momentum::detect::{detect, DetectConfig};
use lob_momentum::momentum::{momentum_series, Split};
use lob_momentum::synth::{gen_background, inject_spoof, BackgroundParams, QuotePin, SpoofSpecFile, SpoofStyle};
use lob_momentum::time::{epoch_date, parse_timestamp};
use lob_momentum::{AreaConfig, Side};

fn main() {
    let cfg = AreaConfig::luna();
    let at = |t: &str| parse_timestamp(t, epoch_date()).unwrap();
    let mut params = BackgroundParams::luna_like(4);
    params.pin = Some(QuotePin {
        from: at("18:36:11"),
        to: at("18:38:18"),
    });
    let background = gen_background(&params, &cfg).unwrap();

    let spec = SpoofSpecFile {
        style: SpoofStyle::Layered {
            levels: 4,
            level_gap: 8,
            level_interval_us: 880_000,
        },
        side: Side::Buy,
        price: Some("1.20".into()),
        offset: None,
        size: "50000".into(),
        submit: "18:36.13.59".into(),
        cancel: "18:38.16.02".into(),
    }
    .resolve(&cfg.precision, epoch_date())
    .unwrap();
    let out = inject_spoof(&background, &spec, &cfg).unwrap();

    let series = bucketize(&out.stream, &cfg, None, ReplayMode::Strict).unwrap();
    let momentum = momentum_series(&series, &cfg, Split::Both).unwrap();
    let report = detect(&series, &momentum, &cfg, &DetectConfig::default()).unwrap();

    println!(
        "{} anomalous buckets, {} traced records",
        report.ranked.len(),
        report.traced_events().count()
    );
    for c in &report.layering_clusters {
        let levels: Vec<String> = c.price_levels.iter().map(|&p| cfg.precision.format_price(p)).collect();
        println!(
            "size {:>10}: {:<17} {} pairs on [{}]",
            cfg.precision.format_size(c.size),
            format!("{:?}", c.label),
            c.pairs,
            levels.join(", ")
        );
    }
}
