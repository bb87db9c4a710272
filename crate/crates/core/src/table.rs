//! Multi-anchor recommendation state and deterministic event-log replay.
//!
//! A [`RecTable`] maps each anchor to its recommendation list and keeps a
//! reverse index from item to the anchors whose lists contain it, which
//! drives cross-anchor propagation: a click on item `B` can update every
//! list containing `B`, not just the anchor the click happened on.
//!
//! Replay is a strictly ordered fold of [`Event`]s over the table. The
//! rank reduction parameter for each update is chosen from the item's
//! recent checkout / add-to-cart history (checkout wins over cart wins
//! over the plain click parameter), and the parameters themselves can be
//! recomputed from a log's observed per-product click rates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decay::{alpha_from_half_life, AnchorList, DecayError, DecayParams, InsertionStrategy};
use crate::event::{Event, EventError, EventKind};

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("malformed event: {0}")]
    MalformedEvent(#[from] EventError),
    #[error("events not sorted by timestamp: first out-of-order index {index}")]
    UnsortedEvents { index: usize },
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error("event log is empty")]
    EmptyLog,
    #[error("event log spans zero duration")]
    ZeroDuration,
    #[error(transparent)]
    Decay(#[from] DecayError),
}

/// Engine configuration: one rank reduction parameter per event type,
/// pruning threshold, insertion strategy, and the windows that drive
/// parameter selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub alpha_rec: f64,
    pub alpha_checkout: f64,
    pub alpha_cart: f64,
    pub epsilon: f64,
    pub insertion: InsertionStrategy,
    /// Horizon over which an idle item's rank should halve, used when
    /// recomputing alphas from a log.
    pub period_of_interest_ms: i64,
    /// How long a checkout / add-to-cart keeps an item "recent".
    pub recent_window_ms: i64,
    /// Whether a click updates every list containing the item.
    pub propagate: bool,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), TableError> {
        for (name, alpha) in [
            ("alpha_rec", self.alpha_rec),
            ("alpha_checkout", self.alpha_checkout),
            ("alpha_cart", self.alpha_cart),
        ] {
            if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
                return Err(TableError::InvalidConfig(format!(
                    "{name} = {alpha} outside (0, 1)"
                )));
            }
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon >= 0.5 {
            return Err(TableError::InvalidConfig(format!(
                "epsilon = {} outside (0, 1/2)",
                self.epsilon
            )));
        }
        if self.period_of_interest_ms <= 0 {
            return Err(TableError::InvalidConfig(
                "period_of_interest_ms must be positive".into(),
            ));
        }
        if self.recent_window_ms <= 0 {
            return Err(TableError::InvalidConfig(
                "recent_window_ms must be positive".into(),
            ));
        }
        Ok(())
    }

    fn params_with_alpha(&self, alpha: f64) -> Result<DecayParams, TableError> {
        Ok(DecayParams::new(alpha, self.epsilon, self.insertion)?)
    }
}

impl Default for EngineConfig {
    /// Half-life of 10 updates for every event type, pruning at 0.001,
    /// max-entropy insertion, one-week period of interest, 24 h recency
    /// window, propagation on.
    fn default() -> Self {
        let alpha = alpha_from_half_life(10.0).expect("10 is a valid half-life");
        EngineConfig {
            alpha_rec: alpha,
            alpha_checkout: alpha,
            alpha_cart: alpha,
            epsilon: 1e-3,
            insertion: InsertionStrategy::MaxEntropy,
            period_of_interest_ms: 7 * 24 * 3_600_000,
            recent_window_ms: 24 * 3_600_000,
            propagate: true,
        }
    }
}

/// Recently checked-out and added-to-cart items with their timestamps,
/// kept in event order and expired against the configured window.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecencyLists {
    pub checkouts: Vec<(String, i64)>,
    pub carts: Vec<(String, i64)>,
}

impl RecencyLists {
    pub fn note(&mut self, kind: EventKind, item: &str, ts: i64) {
        match kind {
            EventKind::Checkout => self.checkouts.push((item.to_string(), ts)),
            EventKind::AddToCart => self.carts.push((item.to_string(), ts)),
            EventKind::RecClick => {}
        }
    }

    /// Drop entries older than `window_ms` relative to `now`.
    pub fn expire(&mut self, now: i64, window_ms: i64) {
        self.checkouts.retain(|(_, ts)| now - ts <= window_ms);
        self.carts.retain(|(_, ts)| now - ts <= window_ms);
    }

    fn contains(entries: &[(String, i64)], item: &str, now: i64, window_ms: i64) -> bool {
        entries
            .iter()
            .any(|(i, ts)| i == item && now - ts <= window_ms)
    }

    /// Pick the rank reduction parameter for an update on `item` at time
    /// `now`: recently checked-out items use the checkout parameter,
    /// then recently carted items the cart parameter, otherwise the
    /// plain recommendation-click parameter.
    pub fn select_alpha(&self, item: &str, now: i64, config: &EngineConfig) -> f64 {
        if Self::contains(&self.checkouts, item, now, config.recent_window_ms) {
            config.alpha_checkout
        } else if Self::contains(&self.carts, item, now, config.recent_window_ms) {
            config.alpha_cart
        } else {
            config.alpha_rec
        }
    }
}

/// Counters reported by a batch replay.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub processed: u64,
    pub rejected: u64,
    pub rec_clicks: u64,
    pub checkouts: u64,
    pub add_to_carts: u64,
    pub distinct_anchors: u64,
}

/// Rank reduction parameters recomputed from a log, one per event type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphas {
    pub alpha_rec: f64,
    pub alpha_checkout: f64,
    pub alpha_cart: f64,
}

/// The full recommendation state: anchor lists plus the reverse index
/// from item id to the anchors whose lists contain it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecTable {
    lists: BTreeMap<String, AnchorList>,
    reverse: BTreeMap<String, BTreeSet<String>>,
}

impl RecTable {
    pub fn new() -> Self {
        RecTable::default()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn get(&self, anchor: &str) -> Option<&AnchorList> {
        self.lists.get(anchor)
    }

    /// Anchors in sorted order.
    pub fn anchors(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn lists(&self) -> impl Iterator<Item = &AnchorList> {
        self.lists.values()
    }

    /// Anchors whose lists contain `item`, in sorted order.
    pub fn anchors_containing(&self, item: &str) -> impl Iterator<Item = &str> {
        self.reverse
            .get(item)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    /// Insert or replace a whole list, keeping the reverse index in sync.
    pub fn set_list(&mut self, list: AnchorList) {
        let anchor = list.anchor().to_string();
        let old_items: Vec<String> = self
            .lists
            .get(&anchor)
            .map(|l| l.items().to_vec())
            .unwrap_or_default();
        for item in &old_items {
            if !list.contains(item) {
                self.unlink(item, &anchor);
            }
        }
        for item in list.items() {
            self.reverse
                .entry(item.clone())
                .or_default()
                .insert(anchor.clone());
        }
        self.lists.insert(anchor, list);
    }

    fn unlink(&mut self, item: &str, anchor: &str) {
        if let Some(set) = self.reverse.get_mut(item) {
            set.remove(anchor);
            if set.is_empty() {
                self.reverse.remove(item);
            }
        }
    }

    /// Top `k` recommendations for `anchor` in descending probability
    /// order (ties by item id). Unknown anchors yield an empty list.
    pub fn top_k(&self, anchor: &str, k: usize) -> Vec<(String, f64)> {
        self.lists.get(anchor).map(|l| l.top(k)).unwrap_or_default()
    }

    /// Apply one event: select the rank reduction parameter from the
    /// item's recency, update the event's anchor list (insertion happens
    /// only there), propagate the click to every other list containing
    /// the item when enabled, and record checkout / add-to-cart recency.
    ///
    /// Malformed events are rejected with an error and leave the table
    /// untouched, so batch replay can skip them and continue.
    pub fn process_event(
        &mut self,
        event: &Event,
        config: &EngineConfig,
        recents: &mut RecencyLists,
    ) -> Result<(), TableError> {
        event.validate()?;
        let alpha = recents.select_alpha(&event.item, event.ts, config);
        let params = config.params_with_alpha(alpha)?;

        // Propagation targets are read before the anchor update so a
        // fresh insertion does not propagate to itself.
        let targets: Vec<String> = if config.propagate {
            self.anchors_containing(&event.item)
                .filter(|a| *a != event.anchor)
                .map(str::to_string)
                .collect()
        } else {
            Vec::new()
        };

        let list = match self.lists.get(&event.anchor) {
            Some(list) => list.click_update(&event.item, &params)?,
            None => AnchorList::empty(event.anchor.clone())?.click_update(&event.item, &params)?,
        };
        self.set_list(list);

        for anchor in targets {
            let updated = self.lists[&anchor].click_update(&event.item, &params)?;
            self.set_list(updated);
        }

        recents.note(event.kind, &event.item, event.ts);
        recents.expire(event.ts, config.recent_window_ms);
        Ok(())
    }

    /// Replay an ordered event log. Events must be sorted by timestamp
    /// (ties keep input order); malformed events are counted as rejected
    /// and skipped. Identical inputs produce identical tables.
    pub fn process_log(
        &mut self,
        events: &[Event],
        config: &EngineConfig,
        recents: &mut RecencyLists,
    ) -> Result<ReplayStats, TableError> {
        config.validate()?;
        let mut stats = ReplayStats::default();
        let mut anchors_touched: BTreeSet<&str> = BTreeSet::new();
        let mut prev_ts = i64::MIN;
        for (index, event) in events.iter().enumerate() {
            if event.validate().is_err() {
                stats.rejected += 1;
                continue;
            }
            if event.ts < prev_ts {
                return Err(TableError::UnsortedEvents { index });
            }
            prev_ts = event.ts;
            self.process_event(event, config, recents)?;
            stats.processed += 1;
            match event.kind {
                EventKind::RecClick => stats.rec_clicks += 1,
                EventKind::Checkout => stats.checkouts += 1,
                EventKind::AddToCart => stats.add_to_carts += 1,
            }
            anchors_touched.insert(&event.anchor);
        }
        stats.distinct_anchors = anchors_touched.len() as u64;
        Ok(stats)
    }

    /// Verify that every list satisfies its invariants and that the
    /// maintained reverse index equals one rebuilt from scratch.
    pub fn validate(&self) -> Result<(), TableError> {
        for (anchor, list) in &self.lists {
            if anchor != list.anchor() {
                return Err(TableError::InvalidConfig(format!(
                    "list stored under {anchor:?} carries anchor {:?}",
                    list.anchor()
                )));
            }
            if !list.is_empty() {
                let sum: f64 = list.probs().iter().sum();
                if (sum - 1.0).abs() > crate::decay::NORMALIZATION_TOL {
                    return Err(TableError::Decay(DecayError::NotNormalized(sum)));
                }
            }
        }
        if self.rebuilt_reverse() != self.reverse {
            return Err(TableError::InvalidConfig(
                "reverse index out of sync with lists".into(),
            ));
        }
        Ok(())
    }

    /// The reverse index reconstructed from the lists alone.
    pub fn rebuilt_reverse(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut rebuilt: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (anchor, list) in &self.lists {
            for item in list.items() {
                rebuilt.entry(item.clone()).or_default().insert(anchor.clone());
            }
        }
        rebuilt
    }

    /// The maintained reverse index.
    pub fn reverse_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.reverse
    }
}

/// Recompute rank reduction parameters from a log's observed rates.
///
/// For each event kind the per-product rate is
/// `count / (distinct anchors * log duration)`; the expected number of
/// per-product events over `period_of_interest_ms` becomes the half-life
/// `T`, and the parameter is `exp(-ln 2 / T)` clamped to
/// `[0.5, 0.9999]`. Kinds with no events keep the supplied defaults.
pub fn compute_alphas_from_log(
    events: &[Event],
    period_of_interest_ms: i64,
    defaults: Alphas,
) -> Result<Alphas, TableError> {
    if period_of_interest_ms <= 0 {
        return Err(TableError::InvalidConfig(
            "period_of_interest_ms must be positive".into(),
        ));
    }
    let valid: Vec<&Event> = events.iter().filter(|e| e.validate().is_ok()).collect();
    if valid.is_empty() {
        return Err(TableError::EmptyLog);
    }
    let first = valid.iter().map(|e| e.ts).min().expect("non-empty");
    let last = valid.iter().map(|e| e.ts).max().expect("non-empty");
    let duration = last - first;
    if duration <= 0 {
        return Err(TableError::ZeroDuration);
    }

    let alpha_for_kind = |kind: EventKind, default: f64| -> f64 {
        let of_kind: Vec<&&Event> = valid.iter().filter(|e| e.kind == kind).collect();
        if of_kind.is_empty() {
            return default;
        }
        let anchors: BTreeSet<&str> = of_kind.iter().map(|e| e.anchor.as_str()).collect();
        let rate = of_kind.len() as f64 / (anchors.len() as f64 * duration as f64);
        let expected_updates = rate * period_of_interest_ms as f64;
        (-std::f64::consts::LN_2 / expected_updates)
            .exp()
            .clamp(0.5, 0.9999)
    };

    Ok(Alphas {
        alpha_rec: alpha_for_kind(EventKind::RecClick, defaults.alpha_rec),
        alpha_checkout: alpha_for_kind(EventKind::Checkout, defaults.alpha_checkout),
        alpha_cart: alpha_for_kind(EventKind::AddToCart, defaults.alpha_cart),
    })
}
