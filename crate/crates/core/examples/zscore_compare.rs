//! Momentum detector against a z-score ranking of order sizes, on a BTC-like
//! stream holding a passive spoof and a much larger genuine order parked far
//! from the spread.
//!
//! ```bash
//! cargo run --release --example zscore_compare
//! ```

use lob_momentum::book::{bucketize, ReplayMode};
use lob_momentum::detect::{compare, detect, zscore_baseline, DetectConfig};
use lob_momentum::ingest::sort_stream;
use lob_momentum::momentum::{momentum_series, Split};
use lob_momentum::synth::{gen_background, inject_spoof, BackgroundParams, QuotePin, SpoofSpecFile, SpoofStyle};
use lob_momentum::time::{epoch_date, format_time_of_day, parse_timestamp};
use lob_momentum::{Action, AreaConfig, Event, Side};

fn main() {
    let cfg = AreaConfig::btc();
    let p = cfg.precision;
    let at = |t: &str| parse_timestamp(t, epoch_date()).unwrap();

    let mut params = BackgroundParams::btc_like(7);
    params.start = at("23:00:00");
    params.duration_s = 1800.0;
    params.pin = Some(QuotePin {
        from: at("23:23:20"),
        to: at("23:24:45"),
    });
    let mut stream = gen_background(&params, &cfg).unwrap();
    stream.push(Event::limit(
        at("23:05:00"),
        "genuine-1",
        Action::Submit,
        Side::Buy,
        p.price_ticks("40000").unwrap(),
        p.size_units("200").unwrap(),
    ));
    sort_stream(&mut stream);

    let spec = SpoofSpecFile {
        style: SpoofStyle::Traditional,
        side: Side::Buy,
        price: Some("41334.00".into()),
        offset: None,
        size: "40".into(),
        submit: "23:23.22.81".into(),
        cancel: "23:24.42.68".into(),
    }
    .resolve(&p, epoch_date())
    .unwrap();
    let out = inject_spoof(&stream, &spec, &cfg).unwrap();

    let series = bucketize(&out.stream, &cfg, None, ReplayMode::Strict).unwrap();
    let momentum = momentum_series(&series, &cfg, Split::Both).unwrap();
    let report = detect(&series, &momentum, &cfg, &DetectConfig::default()).unwrap();
    let baseline = zscore_baseline(&out.stream, 10).unwrap();

    let show = |e: &Event| {
        format!(
            "{} {:<11} {:<6} {:>9} x {:>9}",
            format_time_of_day(e.ts),
            e.order_id,
            e.action.to_string(),
            p.format_price(e.price.unwrap_or_default()),
            p.format_size(e.size)
        )
    };
    println!("{:<4} {:<60} z-score", "rank", "momentum deviation");
    for row in compare(&report, &baseline).iter().take(5) {
        let m = row.momentum.as_ref().map(|t| show(&t.event)).unwrap_or_default();
        let z = row
            .zscore
            .as_ref()
            .map(|z| format!("{:.1}  {}", z.z, show(&z.event)))
            .unwrap_or_default();
        println!("{:<4} {:<60} {}", row.rank, m, z);
    }
}
