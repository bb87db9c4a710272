//! Shared fixtures for the engine benchmarks.

use rankdecay::decay::AnchorList;
use rankdecay::event::{Event, EventKind};

/// A list of `n` items with a mildly skewed, normalized distribution.
pub fn skewed_list(n: usize) -> AnchorList {
    let weights: Vec<f64> = (0..n).map(|i| 1.0 / (i + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    AnchorList::from_entries(
        "bench",
        weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| (format!("I{i:04}"), w / total)),
    )
    .expect("valid list")
}

/// A deterministic synthetic event log over small id pools.
pub fn synthetic_events(count: usize, anchors: usize, items: usize) -> Vec<Event> {
    (0..count)
        .map(|i| {
            let kind = match i % 19 {
                0 => EventKind::Checkout,
                7 => EventKind::AddToCart,
                _ => EventKind::RecClick,
            };
            Event::new(
                1 + i as i64 * 37,
                kind,
                format!("A{}", (i * 13) % anchors),
                format!("I{}", (i * 7 + i / 11) % items),
            )
        })
        .collect()
}
