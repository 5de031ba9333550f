//! Adapter for exchange full-channel captures (one JSON message per line).
//!
//! | message                | event                                         |
//! |------------------------|-----------------------------------------------|
//! | `open`                 | limit submit of `remaining_size`              |
//! | `done`, `canceled`     | cancel of `remaining_size`                    |
//! | `done`, `filled`       | nothing, the trades already reduced the order |
//! | `match`                | trade: resting `maker_order_id`, aggressor side |
//! | anything else          | skipped and counted                           |

use serde::Deserialize;

use super::canonical::{parse_price, parse_size, parse_ts};
use super::{ParseOptions, RecordError};
use crate::event::{Action, Event, OrderKind, Side};

/// Outcome of one feed message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedItem {
    Event(Event),
    /// Message carries no book-mutating record; the reason is its type.
    Skipped(String),
}

#[derive(Debug, Deserialize)]
struct Message {
    #[serde(rename = "type")]
    kind: Option<String>,
    time: Option<String>,
    order_id: Option<String>,
    maker_order_id: Option<String>,
    side: Option<String>,
    price: Option<String>,
    size: Option<String>,
    remaining_size: Option<String>,
    reason: Option<String>,
}

fn require<'a>(v: &'a Option<String>, field: &'static str, msg_type: &str) -> Result<&'a str, RecordError> {
    v.as_deref()
        .ok_or_else(|| RecordError::Schema(format!("`{msg_type}` message is missing `{field}`")))
}

fn parse_side(text: &str) -> Result<Side, RecordError> {
    text.parse()
        .map_err(|e: crate::event::UnknownToken| RecordError::Field {
            field: "side",
            value: text.to_string(),
            reason: e.to_string(),
        })
}

/// Maps one full-channel message to at most one [`Event`].
pub fn parse_exchange_feed(json: &str, opts: &ParseOptions) -> Result<FeedItem, RecordError> {
    let msg: Message = serde_json::from_str(json).map_err(|e| RecordError::Json(e.to_string()))?;
    let msg_type = msg
        .kind
        .as_deref()
        .ok_or_else(|| RecordError::Schema("message has no `type`".into()))?;
    let p = &opts.precision;
    match msg_type {
        "open" => {
            let ts = parse_ts(require(&msg.time, "time", msg_type)?, opts)?;
            let id = require(&msg.order_id, "order_id", msg_type)?;
            let side = parse_side(require(&msg.side, "side", msg_type)?)?;
            let price = parse_price(require(&msg.price, "price", msg_type)?, "price", p)?;
            let size = parse_size(
                require(&msg.remaining_size, "remaining_size", msg_type)?,
                "remaining_size",
                p,
            )?;
            Ok(FeedItem::Event(Event::limit(ts, id, Action::Submit, side, price, size)))
        }
        "done" => {
            let reason = require(&msg.reason, "reason", msg_type)?;
            if reason != "canceled" {
                return Ok(FeedItem::Skipped(format!("done:{reason}")));
            }
            // market orders never rest, so a priceless cancel has nothing to remove
            let Some(price) = msg.price.as_deref() else {
                return Ok(FeedItem::Skipped("done:canceled-unpriced".into()));
            };
            let ts = parse_ts(require(&msg.time, "time", msg_type)?, opts)?;
            let id = require(&msg.order_id, "order_id", msg_type)?;
            let side = parse_side(require(&msg.side, "side", msg_type)?)?;
            let price = parse_price(price, "price", p)?;
            let size = parse_size(
                require(&msg.remaining_size, "remaining_size", msg_type)?,
                "remaining_size",
                p,
            )?;
            if size == 0 {
                return Ok(FeedItem::Skipped("done:canceled-empty".into()));
            }
            Ok(FeedItem::Event(Event::limit(ts, id, Action::Cancel, side, price, size)))
        }
        "match" => {
            let ts = parse_ts(require(&msg.time, "time", msg_type)?, opts)?;
            let maker = require(&msg.maker_order_id, "maker_order_id", msg_type)?;
            // the message side is the maker's
            let maker_side = parse_side(require(&msg.side, "side", msg_type)?)?;
            let price = parse_price(require(&msg.price, "price", msg_type)?, "price", p)?;
            let size = parse_size(require(&msg.size, "size", msg_type)?, "size", p)?;
            Ok(FeedItem::Event(Event {
                ts,
                order_id: maker.to_string(),
                action: Action::Match,
                side: maker_side.opposite(),
                kind: OrderKind::Market,
                price: Some(price),
                size,
            }))
        }
        other => Ok(FeedItem::Skipped(other.to_string())),
    }
}
