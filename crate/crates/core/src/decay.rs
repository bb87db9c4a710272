//! Categorical distributions over recommendation lists and the click
//! update rules that drive them.
//!
//! A click on item `j` of a list with probabilities `p` applies the
//! convex mixture `p_i <- alpha * p_i` for `i != j` and
//! `p_j <- alpha * p_j + (1 - alpha)`, with `alpha` in (0, 1) close to 1.
//! Unseen items enter either with half the current minimum probability or
//! through a max-entropy mixture; items whose probability falls below a
//! threshold `epsilon` are pruned and the remainder rescaled.
//!
//! All operations are pure: they take immutable inputs and return new
//! values, so they are safe to call from any number of threads.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `sum(probs) == 1` for a valid list.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Errors from distribution construction and update contracts.
#[derive(Debug, Error, PartialEq)]
pub enum DecayError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("alpha {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("epsilon {0} outside (0, 1/2)")]
    InvalidEpsilon(f64),
    #[error("item id must be non-empty")]
    EmptyItemId,
    #[error("duplicate item id {0:?}")]
    DuplicateItem(String),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("item {0:?} already present in list")]
    ItemAlreadyPresent(String),
    #[error("operation requires a non-empty list")]
    EmptyList,
    #[error("index {index} out of bounds for list of length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("half-life must be positive, got {0}")]
    NonPositiveHalfLife(f64),
    #[error("ranks must be positive, got {0}")]
    NonPositiveRank(f64),
}

/// A probability value, guaranteed to lie in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self, DecayError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(DecayError::InvalidProbability(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// How an unseen clicked item enters a list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionStrategy {
    /// Insert with half the current minimum probability, then renormalize.
    MinProb,
    /// Insert via the entropy-maximizing mixture weight.
    MaxEntropy,
}

/// Parameters of a single click update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    alpha: f64,
    epsilon: f64,
    insertion: InsertionStrategy,
}

impl DecayParams {
    pub fn new(alpha: f64, epsilon: f64, insertion: InsertionStrategy) -> Result<Self, DecayError> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(DecayError::InvalidAlpha(alpha));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 0.5 {
            return Err(DecayError::InvalidEpsilon(epsilon));
        }
        Ok(DecayParams {
            alpha,
            epsilon,
            insertion,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn insertion(&self) -> InsertionStrategy {
        self.insertion
    }
}

impl Default for DecayParams {
    /// Half-life of 10 updates, pruning threshold 0.001, max-entropy insertion.
    fn default() -> Self {
        DecayParams {
            alpha: alpha_from_half_life(10.0).expect("10 is a valid half-life"),
            epsilon: 1e-3,
            insertion: InsertionStrategy::MaxEntropy,
        }
    }
}

/// An anchor item's recommendation list: distinct item ids paired with a
/// categorical probability distribution.
///
/// Entries are stored in descending probability order with ties broken by
/// item id, so snapshots and top-k queries are deterministic. The empty
/// list (no recommendations recorded yet) is a legal state.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorList {
    anchor: String,
    items: Vec<String>,
    probs: Vec<f64>,
}

impl AnchorList {
    /// An empty list for `anchor` (no recommendations yet).
    pub fn empty(anchor: impl Into<String>) -> Result<Self, DecayError> {
        let anchor = anchor.into();
        if anchor.is_empty() {
            return Err(DecayError::EmptyItemId);
        }
        Ok(AnchorList {
            anchor,
            items: Vec::new(),
            probs: Vec::new(),
        })
    }

    /// Build a list from `(item, probability)` entries, validating all
    /// invariants and normalizing storage order.
    pub fn from_entries(
        anchor: impl Into<String>,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self, DecayError> {
        let mut list = AnchorList::empty(anchor)?;
        for (item, p) in entries {
            if item.is_empty() {
                return Err(DecayError::EmptyItemId);
            }
            if !p.is_finite() || p <= 0.0 || p > 1.0 {
                return Err(DecayError::InvalidProbability(p));
            }
            if list.items.contains(&item) {
                return Err(DecayError::DuplicateItem(item));
            }
            list.items.push(item);
            list.probs.push(p);
        }
        if !list.is_empty() {
            let sum: f64 = list.probs.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(DecayError::NotNormalized(sum));
            }
        }
        list.sort_canonical();
        Ok(list)
    }

    pub fn anchor(&self) -> &str {
        &self.anchor
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item ids in storage order (descending probability, ties by id).
    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Probabilities aligned with [`items`](Self::items).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn contains(&self, item: &str) -> bool {
        self.items.iter().any(|i| i == item)
    }

    pub fn position(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }

    pub fn prob_of(&self, item: &str) -> Option<f64> {
        self.position(item).map(|j| self.probs[j])
    }

    /// Up to `k` entries in descending probability order.
    pub fn top(&self, k: usize) -> Vec<(String, f64)> {
        self.items
            .iter()
            .zip(&self.probs)
            .take(k)
            .map(|(i, p)| (i.clone(), *p))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.items.iter().map(String::as_str).zip(self.probs.iter().copied())
    }

    /// Apply a recommendation click on `item`.
    ///
    /// Dispatches on the list state: a present item gets the convex
    /// mixture boost, an empty list becomes `{item: 1}`, an absent item
    /// is inserted via the configured strategy. Pruning with
    /// `params.epsilon()` runs after every variant.
    pub fn click_update(&self, item: &str, params: &DecayParams) -> Result<AnchorList, DecayError> {
        if item.is_empty() {
            return Err(DecayError::EmptyItemId);
        }
        let updated = if self.is_empty() {
            AnchorList {
                anchor: self.anchor.clone(),
                items: vec![item.to_string()],
                probs: vec![1.0],
            }
        } else if let Some(j) = self.position(item) {
            let mut probs = self.probs.clone();
            decay_click(&mut probs, j, params.alpha());
            let mut list = AnchorList {
                anchor: self.anchor.clone(),
                items: self.items.clone(),
                probs,
            };
            list.sort_canonical();
            list
        } else {
            match params.insertion() {
                InsertionStrategy::MinProb => self.insert_min_prob(item)?,
                InsertionStrategy::MaxEntropy => self.insert_max_entropy(item)?,
            }
        };
        Ok(updated.prune(params.epsilon()))
    }

    /// Insert an absent item with unnormalized mass `min(probs) / 2`,
    /// then renormalize, so the newcomer ranks strictly below every
    /// existing item.
    pub fn insert_min_prob(&self, item: &str) -> Result<AnchorList, DecayError> {
        self.check_insertable(item)?;
        let min = self.probs.iter().copied().fold(f64::INFINITY, f64::min);
        let mass = min / 2.0;
        let total: f64 = self.probs.iter().sum::<f64>() + mass;
        let mut items = self.items.clone();
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p / total).collect();
        items.push(item.to_string());
        probs.push(mass / total);
        let mut list = AnchorList {
            anchor: self.anchor.clone(),
            items,
            probs,
        };
        list.sort_canonical();
        Ok(list)
    }

    /// Insert an absent item with the mixture weight that maximizes the
    /// entropy of the extended distribution.
    ///
    /// With `H = sum_j p_j * ln(p_j)` (so `-H` is the entropy of the
    /// current list), existing probabilities scale by `1 / (1 + e^H)` and
    /// the new item receives `e^H / (1 + e^H)`.
    pub fn insert_max_entropy(&self, item: &str) -> Result<AnchorList, DecayError> {
        self.check_insertable(item)?;
        let h: f64 = self.probs.iter().map(|&p| xlogx(p)).sum();
        let eh = h.exp();
        let scale = 1.0 / (1.0 + eh);
        let mut items = self.items.clone();
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p * scale).collect();
        items.push(item.to_string());
        probs.push(eh * scale);
        let mut list = AnchorList {
            anchor: self.anchor.clone(),
            items,
            probs,
        };
        list.sort_canonical();
        Ok(list)
    }

    /// Mix the distribution toward the clicked index with the weight that
    /// maximizes the entropy of the result.
    ///
    /// With `q = sum_{j != i} p_j` and `C = sum_{j != i} p_j * ln(p_j)`,
    /// the maximizer is `alpha* = 1 / (q + e^{C/q})`; the clicked item
    /// moves to `1 - alpha* * q` and every other item scales by `alpha*`.
    /// `alpha*` may exceed 1 (the click demotes an over-weighted item);
    /// the result is still a valid distribution. The singular case
    /// `q == 0` (clicked item already holds all mass) returns `alpha* = 1`
    /// and the list unchanged.
    pub fn max_entropy_click_alpha(&self, index: usize) -> Result<(f64, AnchorList), DecayError> {
        if index >= self.len() {
            return Err(DecayError::IndexOutOfBounds {
                index,
                len: self.len(),
            });
        }
        let q: f64 = self
            .probs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, p)| p)
            .sum();
        if q == 0.0 {
            return Ok((1.0, self.clone()));
        }
        let c: f64 = self
            .probs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, &p)| xlogx(p))
            .sum();
        let alpha = 1.0 / (q + (c / q).exp());
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p * alpha).collect();
        probs[index] = 1.0 - alpha * q;
        let mut list = AnchorList {
            anchor: self.anchor.clone(),
            items: self.items.clone(),
            probs,
        };
        list.sort_canonical();
        Ok((alpha, list))
    }

    /// Drop every item with probability below `epsilon` and rescale the
    /// survivors to sum 1. If nothing survives, the single
    /// highest-probability item is kept with probability 1 so an anchor
    /// never silently loses all recommendations.
    pub fn prune(&self, epsilon: f64) -> AnchorList {
        if self.is_empty() {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&j| self.probs[j] >= epsilon)
            .collect();
        if keep.len() == self.len() {
            return self.clone();
        }
        if keep.is_empty() {
            // Storage order puts the largest probability (ties by id) first.
            return AnchorList {
                anchor: self.anchor.clone(),
                items: vec![self.items[0].clone()],
                probs: vec![1.0],
            };
        }
        let total: f64 = keep.iter().map(|&j| self.probs[j]).sum();
        let items = keep.iter().map(|&j| self.items[j].clone()).collect();
        let probs = keep.iter().map(|&j| self.probs[j] / total).collect();
        let mut list = AnchorList {
            anchor: self.anchor.clone(),
            items,
            probs,
        };
        list.sort_canonical();
        list
    }

    /// Entropy `-sum p_i * ln(p_i)` with the `0 * ln 0 = 0` convention.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| xlogx(p)).sum::<f64>()
    }

    fn check_insertable(&self, item: &str) -> Result<(), DecayError> {
        if item.is_empty() {
            return Err(DecayError::EmptyItemId);
        }
        if self.is_empty() {
            return Err(DecayError::EmptyList);
        }
        if self.contains(item) {
            return Err(DecayError::ItemAlreadyPresent(item.to_string()));
        }
        Ok(())
    }

    fn sort_canonical(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.probs[b]
                .partial_cmp(&self.probs[a])
                .expect("probabilities are finite")
                .then_with(|| self.items[a].cmp(&self.items[b]))
        });
        self.items = order.iter().map(|&j| self.items[j].clone()).collect();
        self.probs = order.iter().map(|&j| self.probs[j]).collect();
    }

    #[cfg(test)]
    fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// The core click rule on a dense probability vector: scale everything by
/// `alpha` and add `1 - alpha` to the clicked index.
pub fn decay_click(probs: &mut [f64], clicked: usize, alpha: f64) {
    for p in probs.iter_mut() {
        *p *= alpha;
    }
    probs[clicked] += 1.0 - alpha;
}

/// The rank reduction parameter that halves an idle item's probability
/// after `half_life` list updates: `exp(-ln 2 / half_life)`.
pub fn alpha_from_half_life(half_life: f64) -> Result<f64, DecayError> {
    if !half_life.is_finite() || half_life <= 0.0 {
        return Err(DecayError::NonPositiveHalfLife(half_life));
    }
    Ok((-std::f64::consts::LN_2 / half_life).exp())
}

/// Convert a list of positive ranks into a probability distribution via
/// `q_i = (1 - r_i / sum(r)) / (m - 1)`.
///
/// Note the inversion: a larger rank maps to a smaller probability. A
/// single rank maps to `{1}` (the formula is undefined at `m = 1`).
pub fn ranks_to_probabilities(ranks: &[f64]) -> Result<Vec<Probability>, DecayError> {
    if let Some(&bad) = ranks.iter().find(|r| !r.is_finite() || **r <= 0.0) {
        return Err(DecayError::NonPositiveRank(bad));
    }
    match ranks.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Probability::new(1.0)?]),
        m => {
            let total: f64 = ranks.iter().sum();
            ranks
                .iter()
                .map(|&r| Probability::new((1.0 - r / total) / (m as f64 - 1.0)))
                .collect()
        }
    }
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}
