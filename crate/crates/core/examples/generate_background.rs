//! Writes a seeded background stream to stdout as canonical CSV and prints
//! its event mix to stderr. The same seed always gives the same bytes.
//!
//! ```bash
//! cargo run --release --example generate_background -- 42 > bg.csv
//! ```

use lob_momentum::ingest::write_csv;
use lob_momentum::momentum::classify_area;
use lob_momentum::synth::{gen_background, BackgroundParams};
use lob_momentum::{Action, Area, AreaConfig, OrderKind};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = AreaConfig::luna();
    let mut params = BackgroundParams::luna_like(seed);
    params.duration_s = 600.0;
    let events = gen_background(&params, &cfg).expect("valid preset");
    write_csv(std::io::stdout().lock(), &events, &cfg.precision).unwrap();

    let limits: Vec<_> = events
        .iter()
        .filter(|e| e.action == Action::Submit && e.kind == OrderKind::Limit)
        .collect();
    let active = limits
        .iter()
        .filter(|e| classify_area(e.price.unwrap(), params.base_quotes, cfg.alpha) == Area::Active)
        .count();
    let cancels = events.iter().filter(|e| e.action == Action::Cancel).count();
    eprintln!(
        "seed {seed}: {} events, {} limit submits ({:.1}% near the spread at the opening quotes), {} cancels",
        events.len(),
        limits.len(),
        100.0 * active as f64 / limits.len() as f64,
        cancels
    );
}
