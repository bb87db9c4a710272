//! The random walk of hidden click distributions and phase lengths.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal, StandardNormal};

/// Step the hidden distribution: sample from a multivariate normal
/// centered at `current` with covariance `I + eps_walk * S^T S` (`S` an
/// n-by-n matrix of uniform [0, 1) entries drawn row-major), take
/// coordinate-wise absolute values and renormalize to the simplex. The
/// all-zero draw (measure zero) is resampled.
pub fn next_distribution(current: &[f64], eps_walk: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = current.len();
    let s: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let mut sigma = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut dot = 0.0;
            for k in 0..n {
                dot += s[k * n + i] * s[k * n + j];
            }
            let value = eps_walk * dot + if i == j { 1.0 } else { 0.0 };
            sigma[i * n + j] = value;
            sigma[j * n + i] = value;
        }
    }
    let chol = cholesky_lower(&sigma, n);
    loop {
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let mut v = current.to_vec();
        for i in 0..n {
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                v[i] += chol[i * n + k] * zk;
            }
        }
        for coord in v.iter_mut() {
            *coord = coord.abs();
        }
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            for coord in v.iter_mut() {
                *coord /= total;
            }
            return v;
        }
    }
}

/// Phase lengths drawn from `N(mu, mu/5)`, rounded to the nearest click
/// and clamped to at least 1.
pub fn sample_phase_lengths(mu: f64, days: usize, rng: &mut impl Rng) -> Vec<u64> {
    let normal = Normal::new(mu, mu / 5.0).expect("mu >= 1 gives a valid sigma");
    (0..days)
        .map(|_| {
            let draw: f64 = normal.sample(rng);
            draw.round().max(1.0) as u64
        })
        .collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix (row-major). The walk covariance is `I` plus a positive
/// semidefinite term, so every pivot stays at or above 1.
fn cholesky_lower(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    l
}
