//! Monte Carlo ensembles compared with exact laws: one-level marginals, two-time
//! transitions and occupation correlations.
//!
//! Cells whose expected count is below `min_expected` are pooled into a single tail
//! cell, so every z-score is taken where the normal approximation is meaningful.

use crate::correlation::{correlation_det, empirical_correlation, ContourSpec, OccupationEnsemble, SpacePoint};
use crate::dynamics::{fold_replicas, RunConfig};
use crate::error::{invalid, Result};
use crate::kernels::p_kernel_parts;
use crate::lattice::{enumerate_states, interlacing_below, pair_half_len, parts_on_level};
use crate::projection::s_kernel_parts;
use crate::stats::{total_variation, z_score, ZFamily};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Level `k` parts at times `n-1`, `n-½` (reduced length) and `n`, concatenated.
type TransitionKey = Vec<u32>;

/// Joint counts `(X^k(n-1), X^k(n-½), X^k(n))` for every level and step.
#[derive(Clone, Debug, Default)]
pub struct TransitionEnsemble {
    pub levels: usize,
    pub steps: u32,
    pub replicas: u64,
    /// `counts[k-1][n-1]`.
    pub counts: Vec<Vec<HashMap<TransitionKey, u64>>>,
}

struct Acc {
    prev: Vec<Vec<u32>>,
    half: Vec<Vec<u32>>,
    counts: Vec<Vec<HashMap<TransitionKey, u64>>>,
}

impl TransitionEnsemble {
    pub fn simulate(config: &RunConfig) -> Result<Self> {
        let levels = config.levels;
        let steps = config.steps as usize;
        let empty = || Acc {
            prev: vec![Vec::new(); levels],
            half: vec![Vec::new(); levels],
            counts: vec![vec![HashMap::new(); steps]; levels],
        };
        let acc = fold_replicas(
            config,
            empty,
            |acc, t_half, p| {
                for k in 1..=levels {
                    let lvl = p.level(k);
                    if t_half % 2 == 1 {
                        acc.half[k - 1].clear();
                        acc.half[k - 1].extend_from_slice(&lvl[..pair_half_len(k)]);
                        continue;
                    }
                    if t_half > 0 {
                        let mut key = Vec::with_capacity(3 * lvl.len());
                        key.extend_from_slice(&acc.prev[k - 1]);
                        key.extend_from_slice(&acc.half[k - 1]);
                        key.extend_from_slice(lvl);
                        *acc.counts[k - 1][(t_half / 2 - 1) as usize].entry(key).or_insert(0) += 1;
                    }
                    acc.prev[k - 1].clear();
                    acc.prev[k - 1].extend_from_slice(lvl);
                }
            },
            |mut a, b| {
                for (la, lb) in a.counts.iter_mut().zip(b.counts) {
                    for (ha, hb) in la.iter_mut().zip(lb) {
                        for (key, c) in hb {
                            *ha.entry(key).or_insert(0) += c;
                        }
                    }
                }
                a
            },
        )?;
        Ok(TransitionEnsemble { levels, steps: config.steps as u32, replicas: config.replicas, counts: acc.counts })
    }

    fn split(k: usize, key: &[u32]) -> (&[u32], &[u32], &[u32]) {
        let r = parts_on_level(k);
        let h = pair_half_len(k);
        (&key[..r], &key[r..r + h], &key[r + h..])
    }

    /// Empirical law of `X^k(n)`.
    pub fn marginal(&self, k: usize, n: u32) -> Result<HashMap<Vec<u32>, u64>> {
        let hist = self.histogram(k, n)?;
        let mut out = HashMap::new();
        for (key, c) in hist {
            *out.entry(Self::split(k, key).2.to_vec()).or_insert(0) += c;
        }
        Ok(out)
    }

    fn histogram(&self, k: usize, n: u32) -> Result<&HashMap<TransitionKey, u64>> {
        if k == 0 || k > self.levels || n == 0 || n > self.steps {
            return invalid(format!("level {k}, step {n} were not recorded"));
        }
        Ok(&self.counts[k - 1][n as usize - 1])
    }
}

/// `(P_k)^n δ₀` on states with parts `<= cap`.
pub fn level_law(k: usize, n: u32, q: f64, cap: u32) -> Result<HashMap<Vec<u32>, f64>> {
    if k == 0 {
        return invalid("levels start at 1");
    }
    let states = enumerate_states(k, cap);
    let p: Vec<Vec<f64>> = states
        .par_iter()
        .map(|a| states.iter().map(|b| p_kernel_parts(k, a.parts(), b.parts(), &q)).collect())
        .collect();
    let mut v = vec![0.0; states.len()];
    v[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; states.len()];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += vi * p[i][j];
                }
            }
        }
        v = next;
    }
    Ok(states.into_iter().map(|s| s.0).zip(v).collect())
}

/// z-scores over cells with enough expected counts plus one pooled cell for the rest.
#[derive(Clone, Debug, Serialize)]
pub struct PooledComparison {
    pub cells: usize,
    pub pooled_exact: f64,
    pub pooled_count: u64,
    pub max_abs_z: f64,
    pub family: ZFamily,
}

fn pooled<K: std::hash::Hash + Eq>(
    empirical: &HashMap<K, u64>,
    exact: &HashMap<K, f64>,
    trials: u64,
    min_expected: f64,
    sigma: f64,
) -> PooledComparison {
    let n = trials as f64;
    let mut zs = Vec::new();
    let mut kept_exact = 0.0;
    let mut kept_count = 0u64;
    for (key, &p) in exact {
        if p * n >= min_expected {
            let c = empirical.get(key).copied().unwrap_or(0);
            zs.push(z_score(c, trials, p));
            kept_exact += p;
            kept_count += c;
        }
    }
    let cells = zs.len();
    let pooled_exact = (1.0 - kept_exact).max(0.0);
    let pooled_count = trials - kept_count;
    zs.push(z_score(pooled_count, trials, pooled_exact));
    let family = ZFamily::new(&zs, sigma);
    PooledComparison { cells, pooled_exact, pooled_count, max_abs_z: family.max_abs_z, family }
}

/// One-level marginal against `(P_k)^n δ₀`.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalReport {
    pub k: usize,
    pub n: u32,
    pub total_variation: f64,
    pub comparison: PooledComparison,
}

pub fn marginal_report(
    ens: &TransitionEnsemble,
    k: usize,
    n: u32,
    q: f64,
    cap: u32,
    min_expected: f64,
) -> Result<MarginalReport> {
    let emp = ens.marginal(k, n)?;
    let exact = level_law(k, n, q, cap)?;
    Ok(MarginalReport {
        k,
        n,
        total_variation: total_variation(&emp, ens.replicas, &exact),
        comparison: pooled(&emp, &exact, ens.replicas, min_expected, 3.0),
    })
}

/// Joint law of `(X^k(n-1), X^k(n-½), X^k(n))` against `μ_{n-1}(y) S_k(y, (z', y'))`.
#[derive(Clone, Debug, Serialize)]
pub struct TransitionReport {
    pub k: usize,
    pub n: u32,
    pub comparison: PooledComparison,
}

pub fn transition_report(
    ens: &TransitionEnsemble,
    k: usize,
    n: u32,
    q: f64,
    cap: u32,
    min_expected: f64,
    sigma: f64,
) -> Result<TransitionReport> {
    let hist = ens.histogram(k, n)?;
    let start = level_law(k, n - 1, q, cap)?;
    let trials = ens.replicas as f64;
    let targets = enumerate_states(k, cap);
    let h = pair_half_len(k);
    let exact: HashMap<Vec<u32>, f64> = start
        .par_iter()
        .filter(|(_, &m)| m * trials >= min_expected)
        .flat_map_iter(|(y, &m)| {
            let mut out = Vec::new();
            for yp in &targets {
                for z in interlacing_below(yp.parts(), h) {
                    let p = m * s_kernel_parts(k, y, z.parts(), yp.parts(), &q);
                    if p * trials >= min_expected {
                        let mut key = y.clone();
                        key.extend_from_slice(z.parts());
                        key.extend_from_slice(yp.parts());
                        out.push((key, p));
                    }
                }
            }
            out
        })
        .collect();
    Ok(TransitionReport { k, n, comparison: pooled(hist, &exact, ens.replicas, min_expected, sigma) })
}

/// One row of an occupation-correlation comparison.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationRow {
    #[serde(rename = "T")]
    pub t: u32,
    pub points: String,
    pub exact: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationGridReport {
    pub rows: Vec<CorrelationRow>,
    pub family: ZFamily,
}

/// Every single point and every pair of distinct points in `points`, for `T = 1..=t_max`.
pub fn correlation_grid_report(
    ens: &OccupationEnsemble,
    q: f64,
    t_max: u32,
    points: &[SpacePoint],
    spec: &ContourSpec,
    sigma: f64,
) -> Result<CorrelationGridReport> {
    let mut sets: Vec<Vec<SpacePoint>> = points.iter().map(|p| vec![*p]).collect();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sets.push(vec![points[i], points[j]]);
        }
    }
    let jobs: Vec<(u32, &Vec<SpacePoint>)> = (1..=t_max).flat_map(|t| sets.iter().map(move |s| (t, s))).collect();
    let rows: Vec<CorrelationRow> = jobs
        .par_iter()
        .map(|&(t, set)| {
            let exact = correlation_det(t, set, q, spec)?;
            let emp = empirical_correlation(ens, t, set)?;
            let label = set.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";");
            Ok(CorrelationRow { t, points: label, exact, empirical: emp.estimate, sigma: emp.sigma, z: emp.z_against(exact) })
        })
        .collect::<Result<_>>()?;
    let zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    Ok(CorrelationGridReport { family: ZFamily::new(&zs, sigma), rows })
}

/// Points `(s, k)` with `s <= s_max`, `k <= k_max`.
pub fn grid_points(s_max: u32, k_max: usize) -> Vec<SpacePoint> {
    (1..=k_max).flat_map(|k| (0..=s_max).map(move |s| SpacePoint { s, k })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_law_matches_r_powers() {
        let law = level_law(1, 2, 0.5, 60).unwrap();
        let oracle = crate::correlation::level_one_law(2, 0.5, 60);
        for s in 0..10u32 {
            assert!((law[&vec![s]] - oracle[s as usize]).abs() < 1e-14);
        }
    }

    #[test]
    fn small_ensemble_is_consistent() {
        let cfg = RunConfig { q: 0.5, levels: 3, steps: 2, replicas: 4000, seed: 1, odd_wall_uses_half_time: true };
        let ens = TransitionEnsemble::simulate(&cfg).unwrap();
        for k in 1..=3 {
            for n in 1..=2 {
                let total: u64 = ens.counts[k - 1][n - 1].values().sum();
                assert_eq!(total, 4000);
            }
        }
        let rep = marginal_report(&ens, 2, 1, 0.5, 30, 5.0).unwrap();
        assert!(rep.total_variation < 0.05);
        assert!(ens.marginal(4, 1).is_err());
    }
}
