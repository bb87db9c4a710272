//! Click-driven recommendation ranking via exponential rank decay.
//!
//! Recommendation lists are kept as categorical distributions over item
//! ids. Every click multiplies all non-clicked probabilities by a rank
//! reduction parameter `alpha` and tilts the distribution toward the
//! clicked item, so idle items lose rank at an exponential rate without
//! any time-dependent logic. The crate provides:
//!
//! - [`decay`]: the per-list update rules (click mixing, min-probability
//!   and max-entropy insertion of unseen items, pruning, half-life and
//!   rank-to-probability conversions).
//! - [`event`] / [`table`]: the event model, multi-anchor state with a
//!   reverse item index, deterministic batch replay of JSON-lines event
//!   logs, cross-anchor propagation, and per-event-type decay driven by
//!   recency lists.
//! - [`snapshot`]: checksummed, canonical JSON persistence of the full
//!   replay state so hourly batch runs can resume exactly.
//! - [`sim`]: a seeded evaluation harness that walks a hidden click
//!   distribution across the probability simplex and compares the decay
//!   tracker against a frequency-counter baseline, plus the closed-form
//!   expectation of the tracker under piecewise-constant click phases.

pub mod decay;
pub mod event;
pub mod sim;
pub mod snapshot;
pub mod table;

pub use decay::{
    alpha_from_half_life, ranks_to_probabilities, AnchorList, DecayError, DecayParams,
    InsertionStrategy, Probability,
};
pub use event::{Event, EventKind};
pub use sim::{PhaseSchedule, SimConfig, SimError, SimResult};
pub use snapshot::{Snapshot, SnapshotError, SNAPSHOT_VERSION};
pub use table::{Alphas, EngineConfig, RecTable, RecencyLists, ReplayStats, TableError};
