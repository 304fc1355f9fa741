//! Sparse truncations of Markov kernels on enumerated states.

use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::hash::Hash;

/// Truncated kernel. Rows keep only their non-zero entries, sorted by column index.
#[derive(Clone, Debug)]
pub struct KernelMatrix<R, C, T> {
    pub rows: Vec<R>,
    pub cols: Vec<C>,
    pub entries: Vec<Vec<(usize, T)>>,
    /// Largest part allowed in the enumerated states.
    pub cap: u32,
    /// Per-row upper bound on the mass that falls outside `cols`.
    pub row_tail: Vec<f64>,
    /// Per-row bound on the error of the listed entries (0 for directly evaluated kernels,
    /// positive for products whose intermediate sum was truncated).
    pub entry_err: Vec<f64>,
    /// Every state that can reach a listed column is itself a listed row.
    /// Products `A·B` with such a `B` have no intermediate truncation error.
    pub col_closed: bool,
}

impl<R, C, T> KernelMatrix<R, C, T>
where
    R: Clone + Send + Sync,
    C: Clone + Eq + Hash + Send + Sync,
    T: Scalar,
{
    /// Evaluates `f` on every (row, column) pair in parallel; assembly order is the row order.
    /// `stochastic` rows get the tail bound `1 - rowsum`, otherwise the tail is taken as 0.
    pub fn build<F>(rows: Vec<R>, cols: Vec<C>, cap: u32, stochastic: bool, col_closed: bool, f: F) -> Self
    where
        F: Fn(&R, &C) -> T + Sync + Send,
    {
        let entries: Vec<Vec<(usize, T)>> = rows
            .par_iter()
            .map(|r| {
                cols.iter()
                    .enumerate()
                    .filter_map(|(j, c)| {
                        let v = f(r, c);
                        (!v.is_zero()).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_entries(rows, cols, entries, cap, stochastic, col_closed)
    }

    pub fn from_entries(
        rows: Vec<R>,
        cols: Vec<C>,
        entries: Vec<Vec<(usize, T)>>,
        cap: u32,
        stochastic: bool,
        col_closed: bool,
    ) -> Self {
        let row_tail = entries
            .iter()
            .map(|row| {
                if stochastic {
                    let mass: f64 = row.iter().map(|(_, v)| v.to_f64()).sum();
                    (1.0 - mass).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let entry_err = vec![0.0; rows.len()];
        KernelMatrix { rows, cols, entries, cap, row_tail, entry_err, col_closed }
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.entries[i].iter().fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self.entries[i].binary_search_by_key(&j, |(c, _)| *c) {
            Ok(p) => self.entries[i][p].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }
}

impl<R, M, T> KernelMatrix<R, M, T>
where
    R: Clone + Send + Sync,
    M: Clone + Eq + Hash + Send + Sync,
    T: Scalar,
{
    /// Product `self · other`, where `other`'s rows are indexed by `self`'s columns.
    /// Intermediate states absent from `other.rows` are dropped, and the tail bound of
    /// each product row accounts for that loss.
    pub fn compose<C>(&self, other: &KernelMatrix<M, C, T>) -> KernelMatrix<R, C, T>
    where
        C: Clone + Eq + Hash + Send + Sync,
    {
        let index: HashMap<&M, usize> = other.rows.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let entries: Vec<Vec<(usize, T)>> = self
            .entries
            .par_iter()
            .map(|row| {
                let mut acc: HashMap<usize, T> = HashMap::new();
                for (m, a) in row {
                    if let Some(&bi) = index.get(&self.cols[*m]) {
                        for (j, b) in &other.entries[bi] {
                            let t = a.clone() * b.clone();
                            let slot = acc.entry(*j).or_insert_with(T::zero);
                            *slot = slot.clone() + t;
                        }
                    }
                }
                let mut v: Vec<(usize, T)> = acc.into_iter().filter(|(_, x)| !x.is_zero()).collect();
                v.sort_by_key(|(j, _)| *j);
                v
            })
            .collect();
        let entry_err: Vec<f64> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut err = self.entry_err[i];
                let mut lost = 0.0;
                for (m, a) in row {
                    match index.get(&self.cols[*m]) {
                        Some(&bi) => err += a.to_f64() * other.entry_err[bi],
                        None => lost += a.to_f64(),
                    }
                }
                if !other.col_closed {
                    err += lost + self.row_tail[i];
                }
                err
            })
            .collect();
        let row_tail = entries
            .iter()
            .map(|row: &Vec<(usize, T)>| (1.0 - row.iter().map(|(_, v)| v.to_f64()).sum::<f64>()).max(0.0))
            .collect();
        KernelMatrix {
            rows: self.rows.clone(),
            cols: other.cols.clone(),
            entries,
            cap: self.cap.min(other.cap),
            row_tail,
            entry_err,
            col_closed: self.col_closed && other.col_closed,
        }
    }
}

/// Entrywise comparison of two truncations sharing rows and columns.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub max_residual: f64,
    pub exact_zero: bool,
    pub conclusive_rows: usize,
    pub total_rows: usize,
    pub tail_bound: f64,
    pub min_row_mass: f64,
}

/// Compares `a` and `b` on conclusive rows: those whose entry error bound is at most `tail_tol`.
pub fn compare_on_conclusive_rows<R, C, T>(
    a: &KernelMatrix<R, C, T>,
    b: &KernelMatrix<R, C, T>,
    tail_tol: f64,
) -> Comparison
where
    R: Clone + Send + Sync,
    C: Clone + Eq + Hash + Send + Sync,
    T: Scalar,
{
    assert_eq!(a.rows.len(), b.rows.len());
    assert_eq!(a.cols.len(), b.cols.len());
    let mut max_residual: f64 = 0.0;
    let mut exact_zero = true;
    let mut conclusive = 0;
    let mut tail_bound: f64 = 0.0;
    let mut min_mass = f64::INFINITY;
    for i in 0..a.rows.len() {
        let tail = a.entry_err[i].max(b.entry_err[i]);
        if tail > tail_tol {
            continue;
        }
        conclusive += 1;
        tail_bound = tail_bound.max(tail);
        min_mass = min_mass.min(a.row_sum(i).to_f64());
        let (ra, rb) = (&a.entries[i], &b.entries[i]);
        let (mut p, mut q) = (0, 0);
        while p < ra.len() || q < rb.len() {
            let ja = ra.get(p).map_or(usize::MAX, |e| e.0);
            let jb = rb.get(q).map_or(usize::MAX, |e| e.0);
            let diff = if ja == jb {
                p += 1;
                q += 1;
                ra[p - 1].1.clone() - rb[q - 1].1.clone()
            } else if ja < jb {
                p += 1;
                ra[p - 1].1.clone()
            } else {
                q += 1;
                -rb[q - 1].1.clone()
            };
            if !diff.is_zero() {
                exact_zero = false;
                max_residual = max_residual.max(diff.abs().to_f64());
            }
        }
    }
    Comparison {
        max_residual,
        exact_zero,
        conclusive_rows: conclusive,
        total_rows: a.rows.len(),
        tail_bound,
        min_row_mass: if conclusive == 0 { 0.0 } else { min_mass },
    }
}
