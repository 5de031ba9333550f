//! Particle-momentum analytics for Level-3 limit order book streams.
//!
//! Orders are treated as particles moving on the price axis: submissions
//! enter the book, cancellations leave it, trades annihilate. Summing
//! `size * velocity` per sampling period gives a net momentum series for the
//! active area around the spread and for the passive shell beyond it. Jumps
//! in the passive series that quickly bounce back flag spoofing and layering.
//!
//! The pipeline is
//! [`ingest`] -> [`book::bucketize`] -> [`momentum::momentum_series`] ->
//! [`detect`]. [`synth`] generates background streams and injects spoof
//! patterns, and [`cli`] wires everything into batch commands used by the
//! `lobm` binary.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --example momentum_series
//! cargo run --example spoof_detection
//! ```

pub mod book;
pub mod cli;
pub mod detect;
pub mod event;
pub mod ingest;
pub mod momentum;
pub mod precision;
pub mod synth;
pub mod time;

pub use book::{bucketize, BookState, Bucket, BucketSeries, ReplayMode};
pub use event::{Action, AreaConfig, Event, MatchAttribution, OrderKind, Quotes, Side};
pub use momentum::{classify_area, Area, MomentumSample, Split};
pub use precision::{Precision, UnitScale};
