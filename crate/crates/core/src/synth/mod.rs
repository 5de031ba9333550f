//! Synthetic streams: seeded background order flow and injected spoofing
//! patterns with ground-truth labels.

mod background;
mod inject;

use thiserror::Error;

pub use background::{gen_background, BackgroundParams, QuotePin, SizeDistribution};
pub use inject::{
    inject_spoof, InjectOutcome, InjectedRecord, InjectionLabel, SpoofPrice, SpoofSpec, SpoofSpecFile, SpoofStyle,
    SYNTHETIC_PREFIX,
};

use crate::book::BookError;
use crate::time::Micros;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid background parameters: {0}")]
    InvalidParams(String),
    #[error("invalid spoof spec: {0}")]
    InvalidSpec(String),
    #[error("timestamp {ts} is outside the stream span [{first}, {last}]")]
    OutsideSpan { ts: Micros, first: Micros, last: Micros },
    #[error("no reference quotes at {0} to place the spoof relative to")]
    NoQuotes(Micros),
    #[error(transparent)]
    Book(#[from] BookError),
}
