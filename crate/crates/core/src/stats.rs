//! Estimators and test statistics for Monte Carlo comparisons.

use crate::error::{invalid, Result};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::HashMap;
use std::hash::Hash;

/// Proportion estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub estimate: f64,
    pub sigma: f64,
    pub count: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(count: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return invalid("empty ensemble");
        }
        let p = count as f64 / trials as f64;
        Ok(Proportion { estimate: p, sigma: (p * (1.0 - p) / trials as f64).sqrt(), count, trials })
    }

    /// z-score against an exact probability, using the standard error under that probability.
    /// Degenerate exact values give 0 on agreement and infinity otherwise.
    pub fn z_against(&self, exact: f64) -> f64 {
        z_score(self.count, self.trials, exact)
    }
}

pub fn z_score(count: u64, trials: u64, exact: f64) -> f64 {
    let n = trials as f64;
    let p_hat = count as f64 / n;
    let var = exact * (1.0 - exact) / n;
    if var <= 0.0 {
        return if (p_hat - exact).abs() <= 1e-12 { 0.0 } else { f64::INFINITY };
    }
    (p_hat - exact) / var.sqrt()
}

/// `½ Σ |p̂ - p|` over the union of supports.
pub fn total_variation<K: Eq + Hash>(empirical: &HashMap<K, u64>, trials: u64, exact: &HashMap<K, f64>) -> f64 {
    let n = trials as f64;
    let mut tv = 0.0;
    for (k, &p) in exact {
        let e = empirical.get(k).copied().unwrap_or(0) as f64 / n;
        tv += (e - p).abs();
    }
    for (k, &c) in empirical {
        if !exact.contains_key(k) {
            tv += c as f64 / n;
        }
    }
    0.5 * tv
}

/// Two-sided tail probability of a `sigma`-standard-deviation event.
pub fn two_sided_tail(sigma: f64) -> f64 {
    let n = Normal::standard();
    2.0 * (1.0 - n.cdf(sigma))
}

/// Per-comparison critical |z| that keeps the family-wise false-alarm rate of `m`
/// independent comparisons equal to that of a single `sigma` test (Šidák).
pub fn family_critical_z(m: usize, sigma: f64) -> f64 {
    if m <= 1 {
        return sigma;
    }
    let alpha = two_sided_tail(sigma);
    let per = 1.0 - (1.0 - alpha).powf(1.0 / m as f64);
    Normal::standard().inverse_cdf(1.0 - per / 2.0)
}

/// Summary of a family of z-scores.
#[derive(Clone, Debug, Serialize)]
pub struct ZFamily {
    pub comparisons: usize,
    pub max_abs_z: f64,
    pub above_sigma: usize,
    pub expected_above_sigma: f64,
    pub family_critical: f64,
}

impl ZFamily {
    pub fn new(zs: &[f64], sigma: f64) -> Self {
        let m = zs.len();
        ZFamily {
            comparisons: m,
            max_abs_z: zs.iter().fold(0.0, |a, z| a.max(z.abs())),
            above_sigma: zs.iter().filter(|z| z.abs() > sigma).count(),
            expected_above_sigma: m as f64 * two_sided_tail(sigma),
            family_critical: family_critical_z(m, sigma),
        }
    }

    /// Family passes at the stated sigma level.
    pub fn passes(&self) -> bool {
        self.max_abs_z <= self.family_critical
    }
}
