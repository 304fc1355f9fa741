//! Signatures, interlacing, coordinate shifts and state enumeration.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of particles on level `k`.
pub fn parts_on_level(k: usize) -> usize {
    (k + 1) / 2
}

/// Weakly decreasing tuple of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub Vec<u32>);

impl Signature {
    /// Validated constructor for a level-`k` signature.
    pub fn for_level(k: usize, parts: Vec<u32>) -> Result<Self> {
        if k == 0 {
            return invalid("levels start at 1");
        }
        if parts.len() != parts_on_level(k) {
            return invalid(format!(
                "level {k} carries {} parts, got {}",
                parts_on_level(k),
                parts.len()
            ));
        }
        Self::new(parts)
    }

    /// Any weakly decreasing tuple (used for the reduced half-time part of odd levels).
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return invalid(format!("parts must be weakly decreasing: {parts:?}"));
        }
        Ok(Signature(parts))
    }

    pub fn zero(len: usize) -> Self {
        Signature(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn first(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    /// Dot-separated rendering, e.g. `3.2.0`.
    pub fn dotted(&self) -> String {
        let v: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        v.join(".")
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.dotted().replace('.', ","))
    }
}

/// `lower ≺ upper` for equal lengths or when `upper` has one more part.
pub fn interlaces(lower: &Signature, upper: &Signature) -> Result<bool> {
    interlaces_slices(&lower.0, &upper.0)
}

pub(crate) fn interlaces_slices(lo: &[u32], up: &[u32]) -> Result<bool> {
    match up.len().checked_sub(lo.len()) {
        Some(0) | Some(1) => Ok(interlaces_unchecked(lo, up)),
        _ => invalid(format!(
            "interlacing needs |upper| - |lower| in {{0, 1}}, got {} and {}",
            up.len(),
            lo.len()
        )),
    }
}

/// `up[i+1] <= lo[i] <= up[i]` for every index of `lo`; missing upper parts impose nothing.
pub(crate) fn interlaces_unchecked(lo: &[u32], up: &[u32]) -> bool {
    lo.iter().enumerate().all(|(i, &l)| {
        l <= up[i] && up.get(i + 1).map_or(true, |&next| next <= l)
    })
}

/// `{x}`: reflection of negative positions off the wall.
pub fn modified_abs(x: i64) -> u64 {
    if x >= 0 {
        x as u64
    } else {
        (-x - 1) as u64
    }
}

/// Full configuration at a half-integer time, stored as a count of half-steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterlacingState {
    pub t_half: u64,
    pub levels: Vec<Signature>,
}

impl InterlacingState {
    /// Checked constructor: level lengths and interlacing between consecutive levels.
    pub fn new(t_half: u64, levels: Vec<Signature>) -> Result<Self> {
        if levels.is_empty() {
            return invalid("a state needs at least one level");
        }
        for (idx, sig) in levels.iter().enumerate() {
            Signature::for_level(idx + 1, sig.0.clone())?;
        }
        for k in 1..levels.len() {
            if !interlaces(&levels[k - 1], &levels[k])? {
                return invalid(format!(
                    "level {} {} does not interlace with level {} {}",
                    k,
                    levels[k - 1],
                    k + 1,
                    levels[k]
                ));
            }
        }
        Ok(InterlacingState { t_half, levels })
    }

    /// All particles at zero.
    pub fn densely_packed(levels: usize) -> Self {
        InterlacingState {
            t_half: 0,
            levels: (1..=levels).map(|k| Signature::zero(parts_on_level(k))).collect(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &Signature {
        &self.levels[k - 1]
    }

    pub fn is_valid(&self) -> bool {
        InterlacingState::new(self.t_half, self.levels.clone()).is_ok()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("state serialization cannot fail")
    }
}

/// Positions of the shifted process, where no two particles on a level coincide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimpleConfiguration {
    pub t_half: u64,
    pub levels: Vec<Vec<u32>>,
}

/// `X̃^k_i = X^k_i + r_k - i`.
pub fn to_simple(state: &InterlacingState) -> SimpleConfiguration {
    SimpleConfiguration {
        t_half: state.t_half,
        levels: state.levels.iter().map(|s| shift_parts(&s.0)).collect(),
    }
}

pub(crate) fn shift_parts(parts: &[u32]) -> Vec<u32> {
    let r = parts.len() as u32;
    parts
        .iter()
        .enumerate()
        .map(|(i, &p)| p + r - 1 - i as u32)
        .collect()
}

/// Inverse of [`to_simple`].
pub fn from_simple(config: &SimpleConfiguration) -> Result<InterlacingState> {
    let mut levels = Vec::with_capacity(config.levels.len());
    for lvl in &config.levels {
        let r = lvl.len() as u32;
        let mut parts = Vec::with_capacity(lvl.len());
        for (i, &p) in lvl.iter().enumerate() {
            let shift = r - 1 - i as u32;
            if p < shift {
                return invalid(format!("shifted level {lvl:?} has a negative unshifted part"));
            }
            parts.push(p - shift);
        }
        levels.push(Signature(parts));
    }
    InterlacingState::new(config.t_half, levels)
}

/// Two-time state of one level. For odd levels `z` omits the wall particle, whose
/// half-time position is pinned to `y`'s wall part by every kernel that uses it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelPairState {
    pub level: usize,
    pub z: Signature,
    pub y: Signature,
}

/// Length of the half-time component of a pair state on level `k`.
pub fn pair_half_len(k: usize) -> usize {
    if k % 2 == 0 {
        parts_on_level(k)
    } else {
        parts_on_level(k) - 1
    }
}

impl LevelPairState {
    pub fn new(level: usize, z: Signature, y: Signature) -> Result<Self> {
        let y = Signature::for_level(level, y.0)?;
        if z.len() != pair_half_len(level) {
            return invalid(format!(
                "half-time part on level {level} has {} parts, got {}",
                pair_half_len(level),
                z.len()
            ));
        }
        let z = Signature::new(z.0)?;
        if !interlaces_unchecked(&z.0, &y.0) {
            return invalid(format!("{z} does not interlace with {y}"));
        }
        Ok(LevelPairState { level, z, y })
    }
}

/// All weakly decreasing tuples of length `len` with parts `<= cap`, lexicographically increasing.
pub fn enumerate_parts(len: usize, cap: u32) -> Vec<Signature> {
    fn rec(prefix: &mut Vec<u32>, len: usize, cap: u32, out: &mut Vec<Signature>) {
        if prefix.len() == len {
            out.push(Signature(prefix.clone()));
            return;
        }
        for v in 0..=cap {
            prefix.push(v);
            rec(prefix, len, v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), len, cap, &mut out);
    out.sort();
    out
}

/// Level-`k` signatures with `λ₁ <= cap`.
///
/// Order: lexicographic on the (descending) parts tuple, smallest first,
/// so `k = 3, cap = 1` gives `(0,0), (1,0), (1,1)`.
pub fn enumerate_states(k: usize, cap: u32) -> Vec<Signature> {
    enumerate_parts(parts_on_level(k), cap)
}

/// Pair states `(z, y)` of level `k` with `y₁ <= cap`, ordered by `y` then `z`.
pub fn enumerate_pair_states(k: usize, cap: u32) -> Vec<LevelPairState> {
    let zs = enumerate_parts(pair_half_len(k), cap);
    let mut out = Vec::new();
    for y in enumerate_states(k, cap) {
        for z in &zs {
            if interlaces_unchecked(&z.0, &y.0) {
                out.push(LevelPairState { level: k, z: z.clone(), y: y.clone() });
            }
        }
    }
    out
}

/// Signatures `x` of length `len` with `x ≺ y`.
pub fn interlacing_below(y: &[u32], len: usize) -> Vec<Signature> {
    debug_assert!(len == y.len() || len + 1 == y.len());
    let mut out = Vec::new();
    let mut cur = vec![0u32; len];
    fn rec(i: usize, y: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Signature>) {
        if i == cur.len() {
            out.push(Signature(cur.clone()));
            return;
        }
        let lo = y.get(i + 1).copied().unwrap_or(0);
        for v in lo..=y[i] {
            cur[i] = v;
            rec(i + 1, y, cur, out);
        }
    }
    rec(0, y, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[u32]) -> Signature {
        Signature(v.to_vec())
    }

    #[test]
    fn interlacing_examples() {
        assert!(interlaces(&sig(&[1]), &sig(&[3])).unwrap());
        assert!(interlaces(&sig(&[0, 0]), &sig(&[0, 0])).unwrap());
        assert!(!interlaces(&sig(&[2, 1]), &sig(&[1, 1])).unwrap());
        assert!(interlaces(&sig(&[2]), &sig(&[3, 1])).unwrap());
        assert!(!interlaces(&sig(&[0]), &sig(&[3, 1])).unwrap());
        assert!(interlaces(&sig(&[1, 2, 3]), &sig(&[1])).is_err());
    }

    #[test]
    fn modified_abs_examples() {
        assert_eq!(modified_abs(3), 3);
        assert_eq!(modified_abs(-1), 0);
        assert_eq!(modified_abs(0), 0);
        assert_eq!(modified_abs(-4), 3);
    }

    #[test]
    fn shift_examples() {
        let st = InterlacingState::new(
            0,
            vec![sig(&[1]), sig(&[3]), sig(&[3, 2]), sig(&[3, 3])],
        )
        .unwrap();
        let simple = to_simple(&st);
        assert_eq!(simple.levels, vec![vec![1], vec![3], vec![4, 2], vec![4, 3]]);
        assert_eq!(from_simple(&simple).unwrap(), st);
        let packed = to_simple(&InterlacingState::densely_packed(4));
        assert_eq!(packed.levels[3], vec![1, 0]);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_states(1, 2), vec![sig(&[0]), sig(&[1]), sig(&[2])]);
        assert_eq!(
            enumerate_states(3, 1),
            vec![sig(&[0, 0]), sig(&[1, 0]), sig(&[1, 1])]
        );
        assert_eq!(enumerate_states(2, 0), vec![sig(&[0])]);
    }

    #[test]
    fn state_validation() {
        assert!(InterlacingState::new(0, vec![sig(&[2]), sig(&[1])]).is_err());
        assert!(InterlacingState::new(0, vec![sig(&[1, 0])]).is_err());
        assert!(Signature::for_level(3, vec![0, 1]).is_err());
    }

    #[test]
    fn json_shape() {
        let st = InterlacingState::densely_packed(3);
        assert_eq!(st.to_json_line(), r#"{"t_half":0,"levels":[[0],[0],[0,0]]}"#);
    }
}
