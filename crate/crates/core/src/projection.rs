//! Two-time kernels `S_k`, the projection `L_k`, the joint kernel `Q_k`, the capped
//! one-step laws, the four summation identities and the intertwining check.

use crate::error::{invalid, Error, Result};
use crate::kernel_matrix::{compare_on_conclusive_rows, Comparison, KernelMatrix};
use crate::kernels::{below, p_kernel_parts, r_kernel, s_dim_parts};
use crate::lattice::{
    enumerate_pair_states, enumerate_parts, enumerate_states, interlacing_below, pair_half_len,
    parts_on_level, LevelPairState, Signature,
};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

/// Law of `max(a, x - ξ)`.
pub fn left_capped_law<T: Scalar>(a: u32, x: u32, y: u32, q: &T) -> T {
    if !(a <= y && y <= x) {
        return T::zero();
    }
    if y > a {
        (T::one() - q.clone()) * q.powi((x - y) as i64)
    } else {
        q.powi((x - a) as i64)
    }
}

/// Law of `min(b, x + ξ)`; `None` is an infinite barrier.
pub fn right_capped_law<T: Scalar>(b: Option<u32>, x: u32, y: u32, q: &T) -> T {
    if y < x {
        return T::zero();
    }
    match b {
        None => (T::one() - q.clone()) * q.powi((y - x) as i64),
        Some(b) if y > b => T::zero(),
        Some(b) if y < b => (T::one() - q.clone()) * q.powi((y - x) as i64),
        Some(b) => q.powi((b - x) as i64),
    }
}

/// Law of `min(b, {x + ξ₁ - ξ₂})`; `None` is an infinite barrier, giving `R`.
pub fn reflect_capped_law<T: Scalar>(b: Option<u32>, x: u32, y: u32, q: &T) -> T {
    match b {
        None => r_kernel(x, y, q),
        Some(b) if y > b || x > b => T::zero(),
        Some(b) if y < b => r_kernel(x, y, q),
        Some(b) => {
            let x = x as i64;
            q.powi(b as i64) * (q.powi(-x) + q.powi(x + 1)) / (T::one() + q.clone())
        }
    }
}

/// The three capped one-step laws as values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    LeftCapped,
    RightCapped,
    ReflectCapped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneStepLaw<T> {
    pub kind: LawKind,
    pub barrier: Option<u32>,
    pub q: T,
}

impl<T: Scalar> OneStepLaw<T> {
    pub fn prob(&self, x: u32, y: u32) -> T {
        match self.kind {
            LawKind::LeftCapped => left_capped_law(self.barrier.unwrap_or(0), x, y, &self.q),
            LawKind::RightCapped => right_capped_law(self.barrier, x, y, &self.q),
            LawKind::ReflectCapped => reflect_capped_law(self.barrier, x, y, &self.q),
        }
    }

    /// Support from `x`, when finite.
    pub fn support(&self, x: u32) -> Option<std::ops::RangeInclusive<u32>> {
        match (self.kind, self.barrier) {
            (LawKind::LeftCapped, a) => Some(a.unwrap_or(0)..=x),
            (LawKind::RightCapped, Some(b)) => Some(x..=b),
            (LawKind::ReflectCapped, Some(b)) => Some(0..=b),
            _ => None,
        }
    }
}

/// `S_k(y, (z', y'))` on raw parts. For odd `k`, `zp` has the reduced length.
pub(crate) fn s_kernel_parts<T: Scalar>(k: usize, y: &[u32], zp: &[u32], yp: &[u32], q: &T) -> T {
    if !(below(zp, y) && below(zp, yp)) {
        return T::zero();
    }
    let r = parts_on_level(k);
    let ratio = T::from_rational(&(s_dim_parts(k, yp) / s_dim_parts(k, y)));
    let one_minus = T::one() - q.clone();
    let n = zp.len();
    let expo: i64 = (0..n).map(|i| y[i] as i64 + yp[i] as i64 - 2 * zp[i] as i64).sum();
    let base = ratio * q.powi(expo);
    if k % 2 == 0 {
        base * one_minus.powi(k as i64)
    } else {
        base * one_minus.powi(k as i64 - 1) * r_kernel(y[r - 1], yp[r - 1], q)
    }
}

/// `S_k((z, y), (z', y'))`; independent of `z`.
pub fn s_kernel<T: Scalar>(k: usize, from: &LevelPairState, to: &LevelPairState, q: &T) -> Result<T> {
    if from.level != k || to.level != k {
        return invalid(format!("pair states must live on level {k}"));
    }
    Ok(s_kernel_parts(k, from.y.parts(), to.z.parts(), to.y.parts(), q))
}

/// Joint state of level `k-1` at time `n` with the pair state of level `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripleState {
    pub x: Signature,
    pub z: Signature,
    pub y: Signature,
}

/// `L_k((z₀, y₀), (x, z, y)) = 1{(z₀,y₀) = (z,y)} s_{k-1}(x)/s_k(y) 1{x ≺ y}`.
pub fn l_kernel<T: Scalar>(k: usize, from: &LevelPairState, to: &TripleState) -> Result<T> {
    if k < 2 {
        return invalid("L_k needs k >= 2");
    }
    if from.z != to.z || from.y != to.y || to.x.len() != parts_on_level(k - 1) {
        return Ok(T::zero());
    }
    Ok(l_kernel_parts(k, to.x.parts(), to.y.parts()))
}

fn l_kernel_parts<T: Scalar>(k: usize, x: &[u32], y: &[u32]) -> T {
    if !below(x, y) {
        return T::zero();
    }
    T::from_rational(&(s_dim_parts(k - 1, x) / s_dim_parts(k, y)))
}

/// `Q_k((u, z, y), (x, z', y'))`; independent of `z`.
pub fn q_kernel<T: Scalar>(k: usize, from: &TripleState, to: &TripleState, q: &T) -> Result<T> {
    if k < 2 {
        return invalid("Q_k needs k >= 2");
    }
    let rl = parts_on_level(k - 1);
    if from.x.len() != rl || to.x.len() != rl || from.y.len() != parts_on_level(k) {
        return invalid("triple state has wrong lengths");
    }
    Ok(q_kernel_parts(k, from.x.parts(), from.y.parts(), to.x.parts(), to.z.parts(), to.y.parts(), q))
}

pub(crate) fn q_kernel_parts<T: Scalar>(
    k: usize,
    u: &[u32],
    y: &[u32],
    x: &[u32],
    zp: &[u32],
    yp: &[u32],
    q: &T,
) -> T {
    if !below(x, yp) || !below(u, y) {
        return T::zero();
    }
    let r = parts_on_level(k);
    let nv = r - 1;
    let mut lo = Vec::with_capacity(nv);
    let mut hi = Vec::with_capacity(nv);
    for i in 0..nv {
        let l = yp[i + 1];
        let h = x[i].min(zp[i]);
        if h < l {
            return T::zero();
        }
        lo.push(l);
        hi.push(h);
    }
    // v is the half-time position of level k-1 (reduced on odd levels).
    let mut v = lo.clone();
    let mut total = T::zero();
    let jumps = if k % 2 == 1 { nv } else { r };
    loop {
        if below(&v, u) && below(&v, x) {
            let mut term = s_kernel_parts(k - 1, u, &v, x, q);
            for i in 0..jumps {
                if term.is_zero() {
                    break;
                }
                let cap = if i == 0 { None } else { Some(v[i - 1]) };
                let start = cap.map_or(y[i], |c| y[i].min(c));
                term = term * left_capped_law(u[i], start, zp[i], q);
                if term.is_zero() {
                    break;
                }
                term = term * right_capped_law(cap, zp[i].max(x[i]), yp[i], q);
            }
            if k % 2 == 1 && !term.is_zero() {
                let cap = if nv == 0 { None } else { Some(v[nv - 1]) };
                let start = cap.map_or(y[r - 1], |c| y[r - 1].min(c));
                term = term * reflect_capped_law(cap, start, yp[r - 1], q);
            }
            total = total + term;
        }
        // odometer over the v ranges
        let mut i = 0;
        loop {
            if i == nv {
                return total;
            }
            if v[i] < hi[i] {
                v[i] += 1;
                break;
            }
            v[i] = lo[i];
            i += 1;
        }
    }
}

/// Parameters of one summation identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum KeyIdentity {
    /// `Σ_{u=0}^{z} R(u,x) P⃖^u(y,z) = (1-q) q^(x∨z + y - 2z)`, `0 < z <= y`.
    #[serde(rename = "1")]
    One { x: u32, y: u32, z: u32 },
    /// `Σ_{u=a}^{y} q^u P⃖^u(x,y) = q^(x-y) q^a`, `a <= y <= x`.
    #[serde(rename = "2")]
    Two { x: u32, y: u32, a: u32 },
    /// `Σ_{v=y}^{a} q^-v P⃗^v(x,y) = q^(y-x) q^-a`, `x <= y <= a`.
    #[serde(rename = "3")]
    Three { x: u32, y: u32, a: u32 },
    /// `Σ_{v=y'}^{a} q^(v∨y - 2v) R⃗^v(y∧v, y') = q^-a R(y,y') / (1-q)`, `1 <= y' <= a`.
    #[serde(rename = "4")]
    Four { y: u32, yp: u32, a: u32 },
}

impl KeyIdentity {
    pub fn number(&self) -> u8 {
        match self {
            KeyIdentity::One { .. } => 1,
            KeyIdentity::Two { .. } => 2,
            KeyIdentity::Three { .. } => 3,
            KeyIdentity::Four { .. } => 4,
        }
    }

    /// Every admissible parameter tuple with entries `<= bound`.
    pub fn grid(id: u8, bound: u32) -> Result<Vec<KeyIdentity>> {
        let mut out = Vec::new();
        let n = bound;
        match id {
            1 => {
                for x in 0..=n {
                    for y in 1..=n {
                        for z in 1..=y {
                            out.push(KeyIdentity::One { x, y, z });
                        }
                    }
                }
            }
            2 => {
                for x in 0..=n {
                    for y in 0..=x {
                        for a in 0..=y {
                            out.push(KeyIdentity::Two { x, y, a });
                        }
                    }
                }
            }
            3 => {
                for a in 0..=n {
                    for y in 0..=a {
                        for x in 0..=y {
                            out.push(KeyIdentity::Three { x, y, a });
                        }
                    }
                }
            }
            4 => {
                for y in 0..=n {
                    for a in 1..=n {
                        for yp in 1..=a {
                            out.push(KeyIdentity::Four { y, yp, a });
                        }
                    }
                }
            }
            _ => return invalid(format!("identity number must be 1-4, got {id}")),
        }
        Ok(out)
    }
}

/// `(LHS, RHS)` of a summation identity.
pub fn keyidentity_sides<T: Scalar>(id: &KeyIdentity, q: &T) -> Result<(T, T)> {
    let one_minus = T::one() - q.clone();
    match *id {
        KeyIdentity::One { x, y, z } => {
            if !(0 < z && z <= y) {
                return invalid("identity 1 needs 0 < z <= y");
            }
            let lhs = (0..=z).fold(T::zero(), |acc, u| acc + r_kernel(u, x, q) * left_capped_law(u, y, z, q));
            let rhs = one_minus * q.powi(x.max(z) as i64 + y as i64 - 2 * z as i64);
            Ok((lhs, rhs))
        }
        KeyIdentity::Two { x, y, a } => {
            if !(a <= y && y <= x) {
                return invalid("identity 2 needs a <= y <= x");
            }
            let lhs = (a..=y).fold(T::zero(), |acc, u| acc + q.powi(u as i64) * left_capped_law(u, x, y, q));
            Ok((lhs, q.powi(x as i64 - y as i64 + a as i64)))
        }
        KeyIdentity::Three { x, y, a } => {
            if !(x <= y && y <= a) {
                return invalid("identity 3 needs x <= y <= a");
            }
            let lhs = (y..=a).fold(T::zero(), |acc, v| {
                acc + q.powi(-(v as i64)) * right_capped_law(Some(v), x, y, q)
            });
            Ok((lhs, q.powi(y as i64 - x as i64 - a as i64)))
        }
        KeyIdentity::Four { y, yp, a } => {
            if !(1 <= yp && yp <= a) {
                return invalid("identity 4 needs 1 <= y' <= a");
            }
            let lhs = (yp..=a).fold(T::zero(), |acc, v| {
                acc + q.powi(v.max(y) as i64 - 2 * v as i64) * reflect_capped_law(Some(v), y.min(v), yp, q)
            });
            let rhs = q.powi(-(a as i64)) * r_kernel(y, yp, q) / one_minus;
            Ok((lhs, rhs))
        }
    }
}

/// `|LHS - RHS|` of a summation identity.
pub fn keyidentity_check<T: Scalar>(id: &KeyIdentity, q: &T) -> Result<T> {
    let (l, r) = keyidentity_sides(id, q)?;
    Ok((l - r).abs())
}

/// `|Σ_{z'} S_k(y, (z', y')) - P_k(y, y')|` maximized over `y, y'` with parts `<= cap`.
pub fn sp_check<T: Scalar>(k: usize, cap: u32, q: &T) -> T {
    let states = enumerate_states(k, cap);
    let zs = enumerate_parts(pair_half_len(k), cap);
    let mut worst = T::zero();
    for y in &states {
        for yp in &states {
            let s = zs
                .iter()
                .fold(T::zero(), |acc, z| acc + s_kernel_parts(k, y.parts(), z.parts(), yp.parts(), q));
            let d = (s - p_kernel_parts(k, y.parts(), yp.parts(), q)).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Outcome of the intertwining check.
#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningReport {
    pub k: usize,
    pub cap: u32,
    pub comparison: Comparison,
    pub rows: usize,
    pub cols: usize,
}

type PairKey = (Signature, Signature);

/// Builds `L_k Q_k` and `S_k L_k` on states with parts `<= cap` and compares them over
/// conclusive rows, i.e. rows whose entries carry a truncation error of at most `tail_tol`.
/// Both products are entry-exact here: every intermediate state of `L_k Q_k` is listed, and
/// `L_k` reaches a listed column only from a listed row.
pub fn intertwining_check<T: Scalar>(k: usize, cap: u32, q: &T, tail_tol: f64) -> Result<IntertwiningReport> {
    if k < 2 {
        return invalid("intertwining needs k >= 2");
    }
    let pairs: Vec<PairKey> = enumerate_pair_states(k, cap).into_iter().map(|p| (p.z, p.y)).collect();
    let lower = enumerate_states(k - 1, cap);
    let triples: Vec<TripleState> = pairs
        .iter()
        .flat_map(|(z, y)| {
            lower
                .iter()
                .filter(|x| below(x.parts(), y.parts()))
                .map(|x| TripleState { x: x.clone(), z: z.clone(), y: y.clone() })
                .collect::<Vec<_>>()
        })
        .collect();

    let l_mat: KernelMatrix<PairKey, TripleState, T> =
        KernelMatrix::build(pairs.clone(), triples.clone(), cap, false, true, |(z, y), t| {
            if &t.z == z && &t.y == y {
                l_kernel_parts(k, t.x.parts(), y.parts())
            } else {
                T::zero()
            }
        });
    // every x ≺ y has parts <= cap, so each row of L is complete
    debug_assert!((0..pairs.len()).all(|i| {
        interlacing_below(pairs[i].1.parts(), parts_on_level(k - 1)).len() == l_mat.entries[i].len()
    }));

    // Q does not depend on z, so rows are memoized on (u, y).
    let memo: Mutex<HashMap<(Signature, Signature), Vec<(usize, T)>>> = Mutex::new(HashMap::new());
    let q_rows: Vec<Vec<(usize, T)>> = {
        use rayon::prelude::*;
        let mut keys: Vec<(Signature, Signature)> =
            triples.iter().map(|t| (t.x.clone(), t.y.clone())).collect();
        keys.sort();
        keys.dedup();
        let computed: Vec<((Signature, Signature), Vec<(usize, T)>)> = keys
            .par_iter()
            .map(|(u, y)| {
                let row = triples
                    .iter()
                    .enumerate()
                    .filter_map(|(j, c)| {
                        let v = q_kernel_parts(k, u.parts(), y.parts(), c.x.parts(), c.z.parts(), c.y.parts(), q);
                        (!v.is_zero()).then_some((j, v))
                    })
                    .collect();
                ((u.clone(), y.clone()), row)
            })
            .collect();
        memo.lock().expect("memo").extend(computed);
        let memo = memo.lock().expect("memo");
        triples.iter().map(|t| memo[&(t.x.clone(), t.y.clone())].clone()).collect()
    };
    let q_mat = KernelMatrix::from_entries(triples.clone(), triples.clone(), q_rows, cap, true, false);

    let s_mat: KernelMatrix<PairKey, PairKey, T> =
        KernelMatrix::build(pairs.clone(), pairs.clone(), cap, true, false, |(_, y), (zp, yp)| {
            s_kernel_parts(k, y.parts(), zp.parts(), yp.parts(), q)
        });

    let lq = l_mat.compose(&q_mat);
    let sl = s_mat.compose(&l_mat);
    let comparison = compare_on_conclusive_rows(&lq, &sl, tail_tol);
    if comparison.conclusive_rows == 0 {
        return Err(Error::Inconclusive(format!(
            "no row of the k={k}, cap={cap} truncation has tail below {tail_tol}"
        )));
    }
    Ok(IntertwiningReport { k, cap, comparison, rows: pairs.len(), cols: triples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn rat(a: i64, b: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(a, b)
    }

    #[test]
    fn law_examples() {
        let h = rat(1, 2);
        assert_eq!(left_capped_law(0, 2, 0, &h), rat(1, 4));
        assert_eq!(left_capped_law(0, 2, 1, &h), rat(1, 4));
        assert_eq!(right_capped_law(Some(3), 0, 3, &h), rat(1, 8));
        assert_eq!(right_capped_law(Some(3), 0, 1, &h), rat(1, 4));
        assert_eq!(reflect_capped_law(Some(0), 0, 0, &h), rat(1, 1));
        for b in 0..=10u32 {
            for x in 0..=b {
                let s = (0..=b).fold(BigRational::zero(), |a, y| a + reflect_capped_law(Some(b), x, y, &h));
                assert_eq!(s, rat(1, 1));
                let s = (0..=x).fold(BigRational::zero(), |a, y| a + left_capped_law(b.min(x), x, y, &h));
                assert_eq!(s, rat(1, 1));
                let s = (x..=b).fold(BigRational::zero(), |a, y| a + right_capped_law(Some(b), x, y, &h));
                assert_eq!(s, rat(1, 1));
            }
        }
    }

    #[test]
    fn identity_examples() {
        let h = rat(1, 2);
        assert!(keyidentity_check(&KeyIdentity::One { x: 2, y: 3, z: 1 }, &h).unwrap().is_zero());
        assert!(keyidentity_check(&KeyIdentity::Two { x: 3, y: 2, a: 0 }, &rat(1, 3)).unwrap().is_zero());
        assert!(keyidentity_check(&KeyIdentity::Four { y: 1, yp: 1, a: 3 }, &h).unwrap().is_zero());
        assert!(keyidentity_check(&KeyIdentity::One { x: 2, y: 3, z: 0 }, &h).is_err());
    }

    #[test]
    fn l_rows_for_k2() {
        let from = LevelPairState { level: 2, z: Signature(vec![1]), y: Signature(vec![3]) };
        let mut total = BigRational::zero();
        for x in 0..=3 {
            let t = TripleState { x: Signature(vec![x]), z: from.z.clone(), y: from.y.clone() };
            let v: BigRational = l_kernel(2, &from, &t).unwrap();
            assert_eq!(v, rat(1, 4));
            total += v;
        }
        assert_eq!(total, rat(1, 1));
        let other = TripleState { x: Signature(vec![0]), z: Signature(vec![0]), y: Signature(vec![3]) };
        assert!(l_kernel::<BigRational>(2, &from, &other).unwrap().is_zero());
    }

    #[test]
    fn intertwining_small() {
        let rep = intertwining_check(2, 3, &rat(1, 2), 1e-8).unwrap();
        assert!(rep.comparison.exact_zero);
        assert_eq!(rep.comparison.conclusive_rows, rep.rows);
    }
}
