//! Interaction events and the JSON-lines event log format.
//!
//! One event per line:
//! `{"ts": <int ms>, "kind": "rec_click"|"checkout"|"add_to_cart", "anchor": "<id>", "item": "<id>"}`.
//! Lines beginning with `#` are comments; blank lines are ignored.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("timestamp must be positive, got {0}")]
    NonPositiveTimestamp(i64),
    #[error("anchor id must be non-empty")]
    EmptyAnchor,
    #[error("item id must be non-empty")]
    EmptyItem,
}

/// Event kinds tracked by the engine, in decreasing purchase-intent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RecClick,
    Checkout,
    AddToCart,
}

/// A timestamped interaction: the user acted on `item` while on the page
/// anchored by `anchor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Milliseconds since the Unix epoch, UTC.
    pub ts: i64,
    pub kind: EventKind,
    pub anchor: String,
    pub item: String,
}

impl Event {
    pub fn new(ts: i64, kind: EventKind, anchor: impl Into<String>, item: impl Into<String>) -> Self {
        Event {
            ts,
            kind,
            anchor: anchor.into(),
            item: item.into(),
        }
    }

    /// Semantic validity beyond what JSON parsing enforces.
    pub fn validate(&self) -> Result<(), EventError> {
        if self.ts <= 0 {
            return Err(EventError::NonPositiveTimestamp(self.ts));
        }
        if self.anchor.is_empty() {
            return Err(EventError::EmptyAnchor);
        }
        if self.item.is_empty() {
            return Err(EventError::EmptyItem);
        }
        Ok(())
    }
}

/// A line of the event log that failed to parse as an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadLine {
    /// 1-based line number in the log.
    pub line: usize,
    pub message: String,
}

/// Read a JSON-lines event log. Comment (`#`) and blank lines are
/// skipped; lines that are not valid event JSON are collected as
/// [`BadLine`]s so a batch run can survive a dirty log.
pub fn read_events<R: BufRead>(reader: R) -> std::io::Result<(Vec<Event>, Vec<BadLine>)> {
    let mut events = Vec::new();
    let mut bad = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match serde_json::from_str::<Event>(trimmed) {
            Ok(event) => events.push(event),
            Err(e) => bad.push(BadLine {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((events, bad))
}

/// Serialize one event as a JSON log line (no trailing newline).
pub fn to_log_line(event: &Event) -> String {
    serde_json::to_string(event).expect("event serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_log_lines_and_skips_comments() {
        let log = "\
# synthetic log
{\"ts\": 1, \"kind\": \"rec_click\", \"anchor\": \"A\", \"item\": \"B1\"}

{\"ts\": 2, \"kind\": \"checkout\", \"anchor\": \"A\", \"item\": \"B2\"}
not json at all
{\"ts\": 3, \"kind\": \"add_to_cart\", \"anchor\": \"C\", \"item\": \"B1\"}
";
        let (events, bad) = read_events(log.as_bytes()).unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(events[0].kind, EventKind::RecClick);
        assert_eq!(events[1].kind, EventKind::Checkout);
        assert_eq!(events[2].kind, EventKind::AddToCart);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].line, 5);
    }

    #[test]
    fn round_trips_through_log_line() {
        let event = Event::new(42, EventKind::RecClick, "A", "B1");
        let line = to_log_line(&event);
        assert_eq!(
            line,
            "{\"ts\":42,\"kind\":\"rec_click\",\"anchor\":\"A\",\"item\":\"B1\"}"
        );
        let parsed: Event = serde_json::from_str(&line).unwrap();
        assert_eq!(parsed, event);
    }

    #[test]
    fn validation_catches_malformed_events() {
        assert_eq!(
            Event::new(0, EventKind::RecClick, "A", "B").validate(),
            Err(EventError::NonPositiveTimestamp(0))
        );
        assert_eq!(
            Event::new(1, EventKind::RecClick, "", "B").validate(),
            Err(EventError::EmptyAnchor)
        );
        assert_eq!(
            Event::new(1, EventKind::RecClick, "A", "").validate(),
            Err(EventError::EmptyItem)
        );
        assert!(Event::new(1, EventKind::RecClick, "A", "B").validate().is_ok());
    }
}
