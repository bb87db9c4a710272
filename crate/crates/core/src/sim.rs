//! Evaluation harness: a random walk of hidden click distributions on
//! the probability simplex, with the decay tracker raced against a
//! frequency-counter baseline.
//!
//! The hidden click distribution holds still for a random number of
//! clicks (a "phase"), then jumps to a nearby point. Two estimators
//! watch the same click stream:
//!
//! - `X_t`, the decay tracker: `x_j <- alpha * x_j` for all `j`, plus
//!   `1 - alpha` on the clicked coordinate (all coordinates stay
//!   present; no insertion or pruning);
//! - `R_t`, plain click counters starting at one per coordinate, read as
//!   the frequency distribution `R_t / sum(R_t)`.
//!
//! Per phase `k` the harness reports the time-averaged l1 distance of
//! each estimator from the hidden distribution `C_k`, recorded after
//! each click's update. Everything is driven by a single seeded ChaCha8
//! stream in a fixed draw order (phase lengths, then the distribution
//! walk, then one uniform per click), so a run is reproducible
//! bit-for-bit from its config.

mod output;
mod walk;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decay::decay_click;

pub use output::{metrics_csv, summary_json, trajectories_csv};
pub use walk::{next_distribution, sample_phase_lengths};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid phase schedule: {0}")]
    InvalidSchedule(String),
}

/// Simulation parameters. `days` is the number of phases; each phase
/// length is drawn from `N(mu, mu/5)` (rounded, clamped to at least 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of items (simplex dimension).
    pub n: usize,
    /// Rank reduction parameter of the tracker.
    pub alpha: f64,
    /// Number of phases.
    pub days: usize,
    /// Mean phase length in clicks.
    pub mu: f64,
    /// Scale of the positive-definite perturbation in the distribution walk.
    pub eps_walk: f64,
    /// RNG seed; equal configs produce bit-identical results.
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::InvalidConfig(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(SimError::InvalidConfig(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.days < 1 {
            return Err(SimError::InvalidConfig("days must be at least 1".into()));
        }
        if !self.mu.is_finite() || self.mu < 1.0 {
            return Err(SimError::InvalidConfig(format!(
                "mu = {} must be at least 1",
                self.mu
            )));
        }
        if !self.eps_walk.is_finite() || self.eps_walk <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "eps_walk = {} must be positive",
                self.eps_walk
            )));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    /// The long-phase evaluation setting: 10 items, 14 phases averaging
    /// 90 clicks, tracker half-life of one phase.
    fn default() -> Self {
        SimConfig {
            n: 10,
            alpha: crate::decay::alpha_from_half_life(90.0).expect("valid half-life"),
            days: 14,
            mu: 90.0,
            eps_walk: 0.01,
            seed: 42,
        }
    }
}

/// The hidden click distributions `C_1..C_m` and their phase lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    distributions: Vec<Vec<f64>>,
    lengths: Vec<u64>,
}

impl PhaseSchedule {
    pub fn new(distributions: Vec<Vec<f64>>, lengths: Vec<u64>) -> Result<Self, SimError> {
        if distributions.len() != lengths.len() {
            return Err(SimError::InvalidSchedule(format!(
                "{} distributions vs {} lengths",
                distributions.len(),
                lengths.len()
            )));
        }
        if distributions.is_empty() {
            return Err(SimError::InvalidSchedule("no phases".into()));
        }
        let n = distributions[0].len();
        for (k, dist) in distributions.iter().enumerate() {
            if dist.len() != n {
                return Err(SimError::InvalidSchedule(format!(
                    "phase {k} has dimension {} != {n}",
                    dist.len()
                )));
            }
            if dist.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(SimError::InvalidSchedule(format!(
                    "phase {k} has a negative coordinate"
                )));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(SimError::InvalidSchedule(format!(
                    "phase {k} sums to {sum}"
                )));
            }
        }
        if lengths.contains(&0) {
            return Err(SimError::InvalidSchedule("zero-length phase".into()));
        }
        Ok(PhaseSchedule {
            distributions,
            lengths,
        })
    }

    /// Draw a schedule: phase lengths first, then the distribution walk
    /// starting from the first perturbation of the simplex center.
    pub fn sample(config: &SimConfig, rng: &mut ChaCha8Rng) -> PhaseSchedule {
        let lengths = sample_phase_lengths(config.mu, config.days, rng);
        let center = vec![1.0 / config.n as f64; config.n];
        let mut distributions = Vec::with_capacity(config.days);
        let mut current = center;
        for _ in 0..config.days {
            current = next_distribution(&current, config.eps_walk, rng);
            distributions.push(current.clone());
        }
        PhaseSchedule {
            distributions,
            lengths,
        }
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn phases(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_clicks(&self) -> u64 {
        self.lengths.iter().sum()
    }
}

/// One recorded click: both estimators as read after the update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// 1-based click counter.
    pub t: u64,
    /// 1-based phase index.
    pub phase: usize,
    /// 0-based clicked coordinate.
    pub clicked: usize,
    pub x: Vec<f64>,
    pub r_hat: Vec<f64>,
}

/// Per-phase and aggregate l1 tracking errors of both estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub schedule: PhaseSchedule,
    /// Time-averaged `||X_t - C_k||_1` per phase.
    pub delta_x: Vec<f64>,
    /// Time-averaged `||R_t/sum - C_k||_1` per phase.
    pub delta_r: Vec<f64>,
    pub mean_delta_x: f64,
    pub mean_delta_r: f64,
    pub trajectories: Option<Vec<TrajectoryPoint>>,
}

/// Run one simulation. `record_trajectories` keeps the per-click
/// estimator states (large: one row per click).
pub fn run_simulation(
    config: &SimConfig,
    record_trajectories: bool,
) -> Result<SimResult, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let schedule = PhaseSchedule::sample(config, &mut rng);

    let n = config.n;
    let mut x = vec![1.0 / n as f64; n];
    let mut counters = vec![1u64; n];
    let mut delta_x = Vec::with_capacity(schedule.phases());
    let mut delta_r = Vec::with_capacity(schedule.phases());
    let mut trajectories = record_trajectories.then(Vec::new);
    let mut t: u64 = 0;

    for (k, (hidden, &len)) in schedule
        .distributions
        .iter()
        .zip(&schedule.lengths)
        .enumerate()
    {
        let mut sum_dx = 0.0;
        let mut sum_dr = 0.0;
        for _ in 0..len {
            t += 1;
            let u: f64 = rng.random();
            let clicked = sample_index(hidden, u);
            decay_click(&mut x, clicked, config.alpha);
            counters[clicked] += 1;
            let total = (n as u64 + t) as f64;
            sum_dx += l1_distance(&x, hidden);
            sum_dr += counters
                .iter()
                .zip(hidden)
                .map(|(&c, &h)| (c as f64 / total - h).abs())
                .sum::<f64>();
            if let Some(records) = trajectories.as_mut() {
                records.push(TrajectoryPoint {
                    t,
                    phase: k + 1,
                    clicked,
                    x: x.clone(),
                    r_hat: counters.iter().map(|&c| c as f64 / total).collect(),
                });
            }
        }
        delta_x.push(sum_dx / len as f64);
        delta_r.push(sum_dr / len as f64);
    }

    let phases = schedule.phases() as f64;
    Ok(SimResult {
        mean_delta_x: delta_x.iter().sum::<f64>() / phases,
        mean_delta_r: delta_r.iter().sum::<f64>() / phases,
        schedule,
        delta_x,
        delta_r,
        trajectories,
    })
}

/// Closed-form expectation of the tracker after piecewise-constant click
/// phases: starting from `initial` and running phases `(P_k, t_k)`, the
/// expectation is `alpha^t * initial` plus
/// `sum_k alpha^(t - t_1 - .. - t_k) * (1 - alpha^(t_k)) * P_k` with `t`
/// the total click count. The coefficients telescope to exactly 1.
pub fn expected_distribution(
    initial: &[f64],
    phases: &[(Vec<f64>, u64)],
    alpha: f64,
) -> Vec<f64> {
    let total: u64 = phases.iter().map(|(_, len)| len).sum();
    let mut out: Vec<f64> = initial
        .iter()
        .map(|&p| alpha.powi(total as i32) * p)
        .collect();
    let mut elapsed: u64 = 0;
    let mut coeff_sum = alpha.powi(total as i32);
    for (dist, len) in phases {
        debug_assert_eq!(dist.len(), initial.len());
        debug_assert!(*len > 0);
        elapsed += len;
        let coeff =
            alpha.powi((total - elapsed) as i32) * (1.0 - alpha.powi(*len as i32));
        coeff_sum += coeff;
        for (o, &p) in out.iter_mut().zip(dist) {
            *o += coeff * p;
        }
    }
    debug_assert!((coeff_sum - 1.0).abs() <= 1e-12, "coefficients telescope");
    out
}

/// Ratio of the expectation coefficients at the most recent phase versus
/// the one before it, exactly and in the small-`(1 - alpha)`
/// approximation `alpha^{-t2} * t2 / t1` (the per-iteration velocity
/// boost recently active items enjoy).
pub fn velocity_boost_ratio(alpha: f64, t1: u32, t2: u32) -> (f64, f64) {
    let exact = (1.0 - alpha.powi(t2 as i32))
        / (alpha.powi(t2 as i32) * (1.0 - alpha.powi(t1 as i32)));
    let approx = alpha.powi(-(t2 as i32)) * (t2 as f64 / t1 as f64);
    (exact, approx)
}

/// l1 distance between two equal-length vectors.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Categorical draw: walk the cumulative distribution with a uniform
/// `u` in [0, 1).
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
