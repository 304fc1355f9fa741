//! Two half-step sampler: left jumps with pushing and blocking, then right jumps with the wall.

use crate::error::{invalid, Result};
use crate::lattice::{modified_abs, parts_on_level, InterlacingState, Signature};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Which half of the step a draw belongs to: `Half` is `ξ(n+½)`, `Full` is `ξ(n+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfTag {
    Half,
    Full,
}

/// Source of geometric variables `ξ^k_i` for the step currently being taken.
pub trait DrawSource {
    fn draw(&mut self, level: usize, index: usize, tag: HalfTag) -> Result<u32>;
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0,1), got {q}"));
    }
    Ok(())
}

/// Inverse transform `⌊ln U / ln q⌋` with `U` uniform on (0,1].
pub fn geometric_from_uniform(u: f64, ln_q: f64) -> u32 {
    let v = (u.ln() / ln_q).floor();
    if v >= u32::MAX as f64 {
        u32::MAX
    } else {
        v as u32
    }
}

/// Uniform on (0,1] from 53 random bits.
#[inline]
fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Samples one geometric variable from any RNG.
pub fn sample_geometric<R: RngCore>(q: f64, rng: &mut R) -> Result<u32> {
    check_q(q)?;
    Ok(geometric_from_uniform(unit_open_closed(rng.next_u64()), q.ln()))
}

/// Counter-based stream: ChaCha8 keyed by the seed with the replica as stream id.
/// Within a replica the draws are consumed in a fixed order (step, tag, level, index),
/// so every value is a function of `(seed, replica, level, index, half-step)`.
pub struct ReplicaStream {
    rng: ChaCha8Rng,
    ln_q: f64,
}

impl ReplicaStream {
    pub fn new(q: f64, seed: u64, replica: u64) -> Result<Self> {
        check_q(q)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        Ok(ReplicaStream { rng, ln_q: q.ln() })
    }

    #[inline]
    pub fn next_geometric(&mut self) -> u32 {
        geometric_from_uniform(unit_open_closed(self.rng.next_u64()), self.ln_q)
    }
}

/// Draws for one step, laid out level by level.
#[derive(Clone, Debug)]
pub struct StepDraws {
    offsets: Vec<usize>,
    half: Vec<u32>,
    full: Vec<u32>,
}

impl StepDraws {
    pub fn zeros(levels: usize) -> Self {
        let offsets = level_offsets(levels);
        let n = *offsets.last().unwrap();
        StepDraws { offsets, half: vec![0; n], full: vec![0; n] }
    }

    /// Fill every slot from the replica stream: all `Half` draws, then all `Full` draws.
    pub fn fill(&mut self, stream: &mut ReplicaStream) {
        for v in self.half.iter_mut() {
            *v = stream.next_geometric();
        }
        for v in self.full.iter_mut() {
            *v = stream.next_geometric();
        }
    }
}

impl DrawSource for StepDraws {
    fn draw(&mut self, level: usize, index: usize, tag: HalfTag) -> Result<u32> {
        let slot = self.offsets[level - 1] + index - 1;
        Ok(match tag {
            HalfTag::Half => self.half[slot],
            HalfTag::Full => self.full[slot],
        })
    }
}

/// One injected draw.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawEntry {
    pub level: usize,
    pub index: usize,
    pub tag: HalfTag,
    pub value: u32,
}

/// Draw table used in place of the RNG, e.g. to replay a worked example.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawTable {
    pub draws: Vec<DrawEntry>,
    #[serde(skip)]
    lookup: HashMap<(usize, usize, HalfTag), u32>,
}

impl DrawTable {
    pub fn new(draws: Vec<DrawEntry>) -> Self {
        let lookup = draws.iter().map(|d| ((d.level, d.index, d.tag), d.value)).collect();
        DrawTable { draws, lookup }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DrawTable = serde_json::from_str(text)
            .map_err(|e| crate::Error::InvalidArgument(format!("draw table: {e}")))?;
        Ok(DrawTable::new(raw.draws))
    }
}

impl DrawSource for DrawTable {
    fn draw(&mut self, level: usize, index: usize, tag: HalfTag) -> Result<u32> {
        match self.lookup.get(&(level, index, tag)) {
            Some(&v) => Ok(v),
            None => invalid(format!("missing draw for level {level}, index {index}, {tag:?}")),
        }
    }
}

fn level_offsets(levels: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(levels + 1);
    let mut acc = 0;
    offsets.push(0);
    for k in 1..=levels {
        acc += parts_on_level(k);
        offsets.push(acc);
    }
    offsets
}

/// Flat particle array; level `k` occupies `offsets[k-1]..offsets[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Particles {
    offsets: Vec<usize>,
    pos: Vec<u32>,
}

impl Particles {
    pub fn densely_packed(levels: usize) -> Self {
        let offsets = level_offsets(levels);
        let n = *offsets.last().unwrap();
        Particles { offsets, pos: vec![0; n] }
    }

    pub fn from_state(state: &InterlacingState) -> Self {
        let offsets = level_offsets(state.num_levels());
        let pos = state.levels.iter().flat_map(|s| s.0.iter().copied()).collect();
        Particles { offsets, pos }
    }

    pub fn to_state(&self, t_half: u64) -> InterlacingState {
        InterlacingState {
            t_half,
            levels: (1..self.offsets.len()).map(|k| Signature(self.level(k).to_vec())).collect(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn level(&self, k: usize) -> &[u32] {
        &self.pos[self.offsets[k - 1]..self.offsets[k]]
    }

    #[inline]
    fn get(&self, k: usize, i: usize) -> u32 {
        self.pos[self.offsets[k - 1] + i - 1]
    }

    #[inline]
    fn set(&mut self, k: usize, i: usize, v: u32) {
        let o = self.offsets[k - 1];
        self.pos[o + i - 1] = v;
    }

    /// Interlacing between all consecutive levels.
    pub fn interlacing_holds(&self) -> bool {
        (2..=self.num_levels()).all(|k| {
            crate::lattice::interlaces_unchecked(self.level(k - 1), self.level(k))
        }) && (1..=self.num_levels()).all(|k| self.level(k).windows(2).all(|w| w[0] >= w[1]))
    }
}

/// Sampler options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallRule {
    /// The odd-level wall particle's right jump starts from its time-(n+½) position and is
    /// capped by level k−1 at time n+½. When false, the time-n values are used instead.
    pub odd_wall_uses_half_time: bool,
}

impl Default for WallRule {
    fn default() -> Self {
        WallRule { odd_wall_uses_half_time: true }
    }
}

/// Left jumps: time `n` to `n+½`.
pub fn left_half_step_flat<D: DrawSource>(x: &Particles, draws: &mut D) -> Result<Particles> {
    let mut h = x.clone();
    for k in 1..=x.num_levels() {
        let r = parts_on_level(k);
        for i in 1..=r {
            let v = if k % 2 == 1 && i == r {
                if k == 1 {
                    x.get(1, 1)
                } else {
                    x.get(k, r).min(h.get(k - 1, r - 1))
                }
            } else {
                let push = if i >= 2 { h.get(k - 1, i - 1) } else { u32::MAX };
                let block = x.get(k - 1, i);
                let xi = draws.draw(k, i, HalfTag::Half)?;
                let moved = x.get(k, i).min(push) as i64 - xi as i64;
                moved.max(block as i64) as u32
            };
            h.set(k, i, v);
        }
    }
    Ok(h)
}

/// Right jumps: uses the time-`n` and time-`n+½` configurations, returns time `n+1`.
pub fn right_half_step_flat<D: DrawSource>(
    x: &Particles,
    h: &Particles,
    draws: &mut D,
    rule: WallRule,
) -> Result<Particles> {
    let mut y = h.clone();
    for k in 1..=x.num_levels() {
        let r = parts_on_level(k);
        for i in 1..=r {
            let v = if k % 2 == 1 && i == r {
                let src = if rule.odd_wall_uses_half_time { h } else { x };
                let start = src.get(k, r) as i64;
                let cap = if k >= 3 { src.get(k - 1, r - 1) as u64 } else { u64::MAX };
                let up = draws.draw(k, r, HalfTag::Full)? as i64;
                let down = draws.draw(k, r, HalfTag::Half)? as i64;
                modified_abs(start + up - down).min(cap) as u32
            } else {
                let cap = if i >= 2 { h.get(k - 1, i - 1) as u64 } else { u64::MAX };
                let base = h.get(k, i).max(y.get(k - 1, i)) as u64;
                let xi = draws.draw(k, i, HalfTag::Full)? as u64;
                (base + xi).min(cap).min(u32::MAX as u64) as u32
            };
            y.set(k, i, v);
        }
    }
    Ok(y)
}

fn expect_integer_time(state: &InterlacingState) -> Result<()> {
    if state.t_half % 2 != 0 {
        return invalid("left jumps start from an integer time");
    }
    Ok(())
}

/// Left half-step on a validated state.
pub fn left_half_step<D: DrawSource>(state: &InterlacingState, draws: &mut D) -> Result<InterlacingState> {
    expect_integer_time(state)?;
    let h = left_half_step_flat(&Particles::from_state(state), draws)?;
    Ok(h.to_state(state.t_half + 1))
}

/// Right half-step given the time-`n` state and the time-`n+½` state.
pub fn right_half_step<D: DrawSource>(
    at_n: &InterlacingState,
    at_half: &InterlacingState,
    draws: &mut D,
    rule: WallRule,
) -> Result<InterlacingState> {
    expect_integer_time(at_n)?;
    if at_half.t_half != at_n.t_half + 1 || at_half.num_levels() != at_n.num_levels() {
        return invalid("right jumps need the state at n and at n+1/2 with equal level counts");
    }
    let y = right_half_step_flat(
        &Particles::from_state(at_n),
        &Particles::from_state(at_half),
        draws,
        rule,
    )?;
    Ok(y.to_state(at_n.t_half + 2))
}

/// Run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub q: f64,
    #[serde(rename = "K")]
    pub levels: usize,
    pub steps: u64,
    pub replicas: u64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub odd_wall_uses_half_time: bool,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.q > 0.0 && self.q < 1.0) {
            errs.push(format!("q must lie in the open interval (0,1), got {}", self.q));
        }
        if self.levels < 1 {
            errs.push("K must be at least 1".to_string());
        }
        if self.replicas < 1 {
            errs.push("replicas must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn rule(&self) -> WallRule {
        WallRule { odd_wall_uses_half_time: self.odd_wall_uses_half_time }
    }

    fn checked(&self) -> Result<()> {
        self.validate().map_err(|e| crate::Error::InvalidArgument(e.join("; ")))
    }
}

/// Which times a trajectory reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Record {
    Half,
    Integer,
}

/// Iterator over the states of one replica, starting from the densely packed configuration.
pub struct Trajectory {
    stream: ReplicaStream,
    draws: StepDraws,
    current: Particles,
    pending_half: Option<Particles>,
    t_half: u64,
    end_half: u64,
    rule: WallRule,
    record: Record,
    started: bool,
}

impl Trajectory {
    pub fn new(config: &RunConfig, replica: u64, record: Record) -> Result<Self> {
        config.checked()?;
        Ok(Trajectory {
            stream: ReplicaStream::new(config.q, config.seed, replica)?,
            draws: StepDraws::zeros(config.levels),
            current: Particles::densely_packed(config.levels),
            pending_half: None,
            t_half: 0,
            end_half: 2 * config.steps,
            rule: config.rule(),
            record,
            started: false,
        })
    }
}

impl Iterator for Trajectory {
    type Item = InterlacingState;

    fn next(&mut self) -> Option<InterlacingState> {
        if !self.started {
            self.started = true;
            return Some(self.current.to_state(0));
        }
        if let Some(h) = self.pending_half.take() {
            let next = right_half_step_flat(&self.current, &h, &mut self.draws, self.rule)
                .expect("stream draws cover every slot");
            debug_assert!(next.interlacing_holds());
            self.current = next;
            self.t_half += 1;
            return Some(self.current.to_state(self.t_half));
        }
        if self.t_half >= self.end_half {
            return None;
        }
        self.draws.fill(&mut self.stream);
        let h = left_half_step_flat(&self.current, &mut self.draws).expect("stream draws cover every slot");
        debug_assert!(h.interlacing_holds());
        self.t_half += 1;
        match self.record {
            Record::Half => {
                let out = h.to_state(self.t_half);
                self.pending_half = Some(h);
                Some(out)
            }
            Record::Integer => {
                let next = right_half_step_flat(&self.current, &h, &mut self.draws, self.rule)
                    .expect("stream draws cover every slot");
                debug_assert!(next.interlacing_holds());
                self.current = next;
                self.t_half += 1;
                Some(self.current.to_state(self.t_half))
            }
        }
    }
}

/// Trajectory of replica `replica`.
pub fn run_trajectory(config: &RunConfig, replica: u64, record: Record) -> Result<Trajectory> {
    Trajectory::new(config, replica, record)
}

/// Advances a single replica, calling `visit(t_half, state)` at every half-integer time
/// including 0. Avoids building `InterlacingState` values on the hot path.
pub fn drive_replica<F>(config: &RunConfig, replica: u64, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &Particles),
{
    config.checked()?;
    let mut stream = ReplicaStream::new(config.q, config.seed, replica)?;
    let mut draws = StepDraws::zeros(config.levels);
    let mut x = Particles::densely_packed(config.levels);
    let rule = config.rule();
    visit(0, &x);
    for n in 0..config.steps {
        draws.fill(&mut stream);
        let h = left_half_step_flat(&x, &mut draws)?;
        visit(2 * n + 1, &h);
        x = right_half_step_flat(&x, &h, &mut draws, rule)?;
        visit(2 * n + 2, &x);
    }
    Ok(())
}

/// Parallel map-reduce over replicas. The per-replica accumulator is built by `init`,
/// updated by `visit` and combined by `merge`; integer-valued accumulators give
/// results independent of the thread count.
pub fn fold_replicas<A, I, V, M>(config: &RunConfig, init: I, visit: V, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, u64, &Particles) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    config.checked()?;
    (0..config.replicas)
        .into_par_iter()
        .try_fold(&init, |mut acc, rep| {
            drive_replica(config, rep, |t, p| visit(&mut acc, t, p))?;
            Ok(acc)
        })
        .try_reduce(&init, |a, b| Ok(merge(a, b)))
}
