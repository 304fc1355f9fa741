//! Correlation kernel `K_T` of the shifted process and Monte Carlo correlation estimates.

use crate::dynamics::{fold_replicas, RunConfig};
use crate::error::{invalid, Error, Result};
use crate::kernels::{jacobi_table, JacobiParam};
use crate::lattice::parts_on_level;
use crate::linalg::det_complex;
use crate::quadrature::GaussLegendre;
use crate::stats::Proportion;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Lattice point `(s, k)`: position `s` on level `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpacePoint {
    pub s: u32,
    pub k: usize,
}

impl SpacePoint {
    pub fn new(s: u32, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("levels start at 1");
        }
        Ok(SpacePoint { s, k })
    }

    pub fn r(&self) -> usize {
        parts_on_level(self.k)
    }

    pub fn a(&self) -> JacobiParam {
        JacobiParam::for_level(self.k)
    }

    /// Parses `"(s,k);(t,m);…"`.
    pub fn parse_list(text: &str) -> Result<Vec<SpacePoint>> {
        let mut out = Vec::new();
        for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let inner = chunk.trim_start_matches('(').trim_end_matches(')');
            let mut it = inner.split(',').map(str::trim);
            let (s, k) = match (it.next(), it.next(), it.next()) {
                (Some(s), Some(k), None) => (s, k),
                _ => return invalid(format!("point `{chunk}` is not of the form (s,k)")),
            };
            let s: u32 = s.parse().map_err(|_| Error::InvalidArgument(format!("bad position in `{chunk}`")))?;
            let k: usize = k.parse().map_err(|_| Error::InvalidArgument(format!("bad level in `{chunk}`")))?;
            out.push(SpacePoint::new(s, k)?);
        }
        Ok(out)
    }
}

impl std::fmt::Display for SpacePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.s, self.k)
    }
}

/// Shape of the `u`-contour.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourShape {
    /// Circle of radius `radius` about the origin.
    Centered,
    /// Circle about `u = 1` through the saddle point of the `u`-integrand, split in `x`
    /// when the saddle lies inside `(-1, 1)`. Needed once `T` is large.
    Saddle,
    /// Currently `Saddle`. A centred circle loses accuracy to cancellation once
    /// `|φ(u)^-T J_t(u)|` on the circle dwarfs the kernel value.
    Auto,
}

/// Contour and node parameters for `K_T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub radius: f64,
    pub x_nodes: usize,
    pub u_nodes: usize,
    pub tol: f64,
    pub max_doublings: u32,
    pub shape: ContourShape,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { radius: 2.0, x_nodes: 128, u_nodes: 256, tol: 1e-10, max_doublings: 4, shape: ContourShape::Auto }
    }
}

impl ContourSpec {
    pub fn centered(radius: f64) -> Self {
        ContourSpec { radius, shape: ContourShape::Centered, ..Default::default() }
    }

    /// Node counts suited to `T` in the hundreds.
    pub fn large_t() -> Self {
        ContourSpec { x_nodes: 256, u_nodes: 2048, tol: 1e-9, max_doublings: 2, shape: ContourShape::Saddle, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.shape == ContourShape::Centered && !(self.radius > 1.0) {
            return invalid(format!("contour radius must exceed 1 to enclose [-1,1], got {}", self.radius));
        }
        if !self.x_nodes.is_power_of_two() || !self.u_nodes.is_power_of_two() {
            return invalid("node counts must be powers of two");
        }
        Ok(())
    }
}

/// Kernel value with a node-doubling error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelValue {
    pub re: f64,
    pub im: f64,
    pub err_est: f64,
}

impl KernelValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `log φ(x) = 2 log(1-q) - log(1 + q² - 2qx)`.
fn log_phi(x: Complex64, q: f64) -> Complex64 {
    2.0 * (1.0 - q).ln() - (1.0 + q * q - 2.0 * q * x).ln()
}

/// `ln(1 - cos θ)` without cancellation near θ = 0.
fn ln_one_minus_cos(theta: f64) -> f64 {
    (2.0 * (0.5 * theta).sin().powi(2)).ln()
}

fn ln_one_plus_cos(theta: f64) -> f64 {
    (2.0 * (0.5 * theta).cos().powi(2)).ln()
}

/// One circle of the `u`-contour together with the θ-range of `x` paired with it.
struct Piece {
    theta0: f64,
    theta1: f64,
    center: f64,
    radius: f64,
}

struct Geometry {
    pieces: Vec<Piece>,
    /// θ-range over which the residue at `u = x` must be removed.
    residue: Option<(f64, f64)>,
}

/// Left real crossing of the steepest contour for the `u`-integrand.
pub fn saddle_point(t: u32, r_m: usize, q: f64) -> Option<f64> {
    if t == 0 {
        return None;
    }
    let c = r_m as f64 / t as f64;
    if c >= 1.0 {
        return None;
    }
    let u0 = (1.0 + q * q) / (2.0 * q);
    Some((1.0 - c * u0) / (1.0 - c))
}

fn geometry(t: u32, r_m: usize, q: f64, spec: &ContourSpec) -> Geometry {
    let shape = match spec.shape {
        ContourShape::Auto => ContourShape::Saddle,
        s => s,
    };
    if shape == ContourShape::Centered {
        return Geometry {
            pieces: vec![Piece { theta0: 0.0, theta1: PI, center: 0.0, radius: spec.radius }],
            residue: None,
        };
    }
    let d0 = 0.5 / (t.max(1) as f64).sqrt();
    match saddle_point(t, r_m, q) {
        Some(sig) if sig > -1.0 + 2.0 * d0 && sig < 1.0 => {
            let delta = d0.min(0.25 * (1.0 - sig)).min(0.25 * (1.0 + sig));
            let th = sig.acos();
            Geometry {
                pieces: vec![
                    Piece { theta0: 0.0, theta1: th, center: 1.0, radius: 1.0 - sig + delta },
                    Piece { theta0: th, theta1: PI, center: 1.0, radius: 1.0 - sig - delta },
                ],
                residue: Some((th, PI)),
            }
        }
        other => {
            let sig = other.unwrap_or(-1.0).min(-1.0) - d0;
            Geometry {
                pieces: vec![Piece { theta0: 0.0, theta1: PI, center: 1.0, radius: 1.0 - sig }],
                residue: None,
            }
        }
    }
}

/// Single integral `(2^(a_k+1/2)/π) ∫_{θ0}^{θ1} J_s J_t (1-x)^p (1+x)^(1/2) dx` in θ.
fn single_integral(s: u32, ak: JacobiParam, t: u32, am: JacobiParam, p: f64, th0: f64, th1: f64, nodes: usize) -> f64 {
    let gl = GaussLegendre::cached(nodes);
    let pre = 2f64.powf(ak.value() + 0.5) / PI;
    let mut acc = 0.0;
    for (th, w) in gl.on_interval(th0, th1) {
        let x = th.cos();
        let lw = p * ln_one_minus_cos(th) + 0.5 * ln_one_plus_cos(th) + th.sin().ln();
        let js = *jacobi_table(s as usize, ak, x).last().unwrap();
        let jt = *jacobi_table(t as usize, am, x).last().unwrap();
        acc += w * lw.exp() * js * jt;
    }
    pre * acc
}

fn kernel_at(t: u32, p1: SpacePoint, p2: SpacePoint, q: f64, spec: &ContourSpec, nx: usize, nu: usize) -> Complex64 {
    let (rk, rm) = (p1.r() as f64, p2.r() as f64);
    let (ak, am) = (p1.a(), p2.a());
    let tf = t as f64;
    let geo = geometry(t, p2.r(), q, spec);
    let pre = 2f64.powf(ak.value() + 0.5) / PI;
    let gl = GaussLegendre::cached(nx);

    // x-side factors per piece, then a common scale to keep exponentials in range
    let mut xs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(geo.pieces.len());
    let mut scale = f64::NEG_INFINITY;
    for piece in &geo.pieces {
        let mut v = Vec::with_capacity(nx);
        for (th, w) in gl.on_interval(piece.theta0, piece.theta1) {
            let x = th.cos();
            let log_w = (rk + ak.value()) * ln_one_minus_cos(th) + 0.5 * ln_one_plus_cos(th) + th.sin().ln() + w.ln();
            let a = tf * log_phi(Complex64::new(x, 0.0), q).re + log_w;
            scale = scale.max(a);
            v.push((x, a));
        }
        xs.push(v);
    }

    let mut total = Complex64::new(0.0, 0.0);
    for (piece, xv) in geo.pieces.iter().zip(&xs) {
        let step = 2.0 * PI / nu as f64;
        let us: Vec<(Complex64, Complex64)> = (0..nu)
            .map(|j| {
                let e = Complex64::from_polar(1.0, step * j as f64);
                let u = piece.center + piece.radius * e;
                let du = Complex64::new(0.0, piece.radius) * e * step;
                let b = -tf * log_phi(u, q) - rm * (1.0 - u).ln() + scale;
                let jt = *jacobi_table(p2.s as usize, am, u).last().unwrap();
                (u, b.exp() * jt * du / Complex64::new(0.0, 2.0 * PI))
            })
            .collect();
        for &(x, a) in xv {
            let js = *jacobi_table(p1.s as usize, ak, x).last().unwrap();
            let fx = (a - scale).exp() * js;
            if fx == 0.0 {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for &(u, g) in &us {
                inner += g / (x - u);
            }
            total += fx * inner;
        }
    }
    total *= pre;

    let p_single = rk - rm + ak.value();
    if let Some((th0, th1)) = geo.residue {
        total -= single_integral(p1.s, ak, p2.s, am, p_single, th0, th1, nx);
    }
    if p1.k >= p2.k {
        total += single_integral(p1.s, ak, p2.s, am, p_single, 0.0, PI, nx);
    }
    total
}

/// `K_T((s,k), (t,m))` with node doubling until successive values agree to `spec.tol`.
pub fn correlation_kernel(t: u32, p1: SpacePoint, p2: SpacePoint, q: f64, spec: &ContourSpec) -> Result<KernelValue> {
    spec.validate()?;
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0,1), got {q}"));
    }
    if p1.k == 0 || p2.k == 0 {
        return invalid("levels start at 1");
    }
    let (mut nx, mut nu) = (spec.x_nodes, spec.u_nodes);
    let mut prev = kernel_at(t, p1, p2, q, spec, nx, nu);
    for _ in 0..=spec.max_doublings {
        nx *= 2;
        nu *= 2;
        let next = kernel_at(t, p1, p2, q, spec, nx, nu);
        let err = (next - prev).norm();
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        if err <= spec.tol * next.norm().max(1.0) {
            return Ok(KernelValue { re: next.re, im: next.im, err_est: err });
        }
        prev = next;
    }
    Err(Error::NumericalFailure(format!(
        "K_{t}({p1},{p2}) did not converge to {} with {} x-nodes and {} u-nodes",
        spec.tol, nx, nu
    )))
}

/// Kernel matrix `[K_T(p_i, p_j)]` with the largest entry error estimate.
pub fn kernel_matrix(t: u32, points: &[SpacePoint], q: f64, spec: &ContourSpec) -> Result<(Vec<Vec<Complex64>>, f64)> {
    use rayon::prelude::*;
    let n = points.len();
    let flat: Vec<Result<KernelValue>> = (0..n * n)
        .into_par_iter()
        .map(|ij| correlation_kernel(t, points[ij / n], points[ij % n], q, spec))
        .collect();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut err: f64 = 0.0;
    for (ij, v) in flat.into_iter().enumerate() {
        let v = v?;
        err = err.max(v.err_est);
        m[ij / n][ij % n] = v.value();
    }
    Ok((m, err))
}

/// `det[K_T(p_i, p_j)]`, the probability that every point is occupied.
pub fn correlation_det(t: u32, points: &[SpacePoint], q: f64, spec: &ContourSpec) -> Result<f64> {
    let mut sorted = points.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != points.len() {
        return invalid("points must be distinct");
    }
    let (m, _) = kernel_matrix(t, points, q, spec)?;
    Ok(det_complex(m).re)
}

/// Which lattice coordinate the kernel's `s` refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `s = λ_i + r_k - i`.
    Shifted,
    /// `s = λ_i`.
    Plain,
}

impl Convention {
    pub fn coordinate(self, part: u32, r: usize, i: usize) -> u32 {
        match self {
            Convention::Shifted => part + (r - i) as u32,
            Convention::Plain => part,
        }
    }
}

/// Agreement of each candidate convention with exactly known occupation probabilities.
#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub shifted_err: f64,
    pub plain_err: f64,
    pub chosen: Convention,
}

/// Exact law of `X¹₁(T)` from the origin: the `T`-th power of `R`, truncated at `cap`.
pub fn level_one_law(t: u32, q: f64, cap: usize) -> Vec<f64> {
    let r = |x: usize, y: usize| crate::kernels::r_kernel(x as u32, y as u32, &q);
    let mut v = vec![0.0; cap + 1];
    v[0] = 1.0;
    for _ in 0..t {
        let mut next = vec![0.0; cap + 1];
        for (x, &px) in v.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (y, slot) in next.iter_mut().enumerate() {
                *slot += px * r(x, y);
            }
        }
        v = next;
    }
    v
}

/// Decides between the shifted and plain coordinate readings of `K_T`.
///
/// Oracles: at `T = 0` the packed levels 3 and 4 occupy `{0, 1}` in shifted coordinates
/// but only `{0}` in plain ones; at level 1 both readings must match the law of `X¹₁(T)`.
pub fn calibrate_convention(q: f64, spec: &ContourSpec) -> Result<CalibrationReport> {
    let mut shifted_err: f64 = 0.0;
    let mut plain_err: f64 = 0.0;
    for k in [3usize, 4] {
        let r = parts_on_level(k);
        for s in 0..(2 * r as u32 + 1) {
            let v = correlation_kernel(0, SpacePoint { s, k }, SpacePoint { s, k }, q, spec)?.re;
            let shifted = if (s as usize) < r { 1.0 } else { 0.0 };
            let plain = if s == 0 { r as f64 } else { 0.0 };
            shifted_err = shifted_err.max((v - shifted).abs());
            plain_err = plain_err.max((v - plain).abs());
        }
    }
    for t in 1..=3u32 {
        let law = level_one_law(t, q, 40);
        for s in 0..=5u32 {
            let v = correlation_kernel(t, SpacePoint { s, k: 1 }, SpacePoint { s, k: 1 }, q, spec)?.re;
            let e = (v - law[s as usize]).abs();
            shifted_err = shifted_err.max(e);
            plain_err = plain_err.max(e);
        }
    }
    let chosen = if shifted_err <= plain_err { Convention::Shifted } else { Convention::Plain };
    Ok(CalibrationReport { shifted_err, plain_err, chosen })
}

/// Occupation window `s <= s_max`, `k <= k_max`, packed into 64-bit masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub s_max: u32,
    pub k_max: usize,
}

impl Window {
    pub fn new(s_max: u32, k_max: usize) -> Result<Self> {
        if (s_max as usize + 1) * k_max > 64 || k_max == 0 {
            return invalid("occupation window must fit in 64 cells");
        }
        Ok(Window { s_max, k_max })
    }

    pub fn bit(&self, p: SpacePoint) -> Option<u64> {
        (p.k >= 1 && p.k <= self.k_max && p.s <= self.s_max)
            .then(|| 1u64 << ((p.k - 1) * (self.s_max as usize + 1) + p.s as usize))
    }
}

/// Histogram of occupation masks per integer time over an ensemble.
#[derive(Clone, Debug, Default)]
pub struct OccupationEnsemble {
    pub window: Option<Window>,
    pub replicas: u64,
    pub convention: Option<Convention>,
    /// `counts[T]` maps mask to number of replicas.
    pub counts: Vec<HashMap<u64, u64>>,
}

impl OccupationEnsemble {
    /// Runs `config` and records occupation masks at integer times `0..=config.steps`.
    pub fn simulate(config: &RunConfig, window: Window, convention: Convention) -> Result<Self> {
        let steps = config.steps as usize;
        let levels = window.k_max.min(config.levels);
        let counts = fold_replicas(
            config,
            || vec![HashMap::<u64, u64>::new(); steps + 1],
            |acc, t_half, particles| {
                if t_half % 2 != 0 {
                    return;
                }
                let mut mask = 0u64;
                for k in 1..=levels {
                    let lvl = particles.level(k);
                    let r = lvl.len();
                    for (i, &p) in lvl.iter().enumerate() {
                        let s = convention.coordinate(p, r, i + 1);
                        if let Some(b) = window.bit(SpacePoint { s, k }) {
                            mask |= b;
                        }
                    }
                }
                *acc[(t_half / 2) as usize].entry(mask).or_insert(0) += 1;
            },
            |mut a, b| {
                for (ha, hb) in a.iter_mut().zip(b) {
                    for (m, c) in hb {
                        *ha.entry(m).or_insert(0) += c;
                    }
                }
                a
            },
        )?;
        Ok(OccupationEnsemble { window: Some(window), replicas: config.replicas, convention: Some(convention), counts })
    }
}

/// Fraction of replicas in which every point is occupied at time `t`, with binomial error.
pub fn empirical_correlation(ensemble: &OccupationEnsemble, t: u32, points: &[SpacePoint]) -> Result<Proportion> {
    if ensemble.replicas == 0 {
        return invalid("empty ensemble");
    }
    let window = ensemble.window.ok_or_else(|| Error::InvalidArgument("ensemble has no window".into()))?;
    let hist = ensemble
        .counts
        .get(t as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("time {t} was not recorded")))?;
    let mut need = 0u64;
    for &p in points {
        need |= window.bit(p).ok_or_else(|| Error::InvalidArgument(format!("{p} is outside the recorded window")))?;
    }
    let count = hist.iter().filter(|(m, _)| *m & need == need).map(|(_, c)| *c).sum();
    Proportion::new(count, ensemble.replicas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_points() {
        let p = SpacePoint::parse_list("(0,1); (3,2)").unwrap();
        assert_eq!(p, vec![SpacePoint { s: 0, k: 1 }, SpacePoint { s: 3, k: 2 }]);
        assert!(SpacePoint::parse_list("(1,0)").is_err());
        assert!(SpacePoint::parse_list("(1,2,3)").is_err());
    }

    #[test]
    fn packed_start_is_deterministic() {
        let spec = ContourSpec::default();
        let pts = [SpacePoint { s: 0, k: 3 }, SpacePoint { s: 1, k: 3 }, SpacePoint { s: 0, k: 1 }];
        let d = correlation_det(0, &pts, 0.5, &spec).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
        let d = correlation_det(0, &[SpacePoint { s: 2, k: 3 }], 0.5, &spec).unwrap();
        assert!(d.abs() < 1e-9, "{d}");
    }

    #[test]
    fn level_one_matches_markov_chain() {
        let spec = ContourSpec::default();
        let law = level_one_law(3, 0.5, 60);
        for s in 0..6u32 {
            let v = correlation_kernel(3, SpacePoint { s, k: 1 }, SpacePoint { s, k: 1 }, 0.5, &spec).unwrap();
            assert!((v.re - law[s as usize]).abs() < 1e-9);
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn saddle_contour_agrees_with_circle() {
        let circle = ContourSpec::centered(2.0);
        let saddle = ContourSpec { shape: ContourShape::Saddle, ..Default::default() };
        for &(t, s, k, u, m) in &[(3u32, 1u32, 3usize, 2u32, 3usize), (5, 0, 4, 1, 3), (5, 2, 2, 0, 5)] {
            let a = correlation_kernel(t, SpacePoint { s, k }, SpacePoint { s: u, k: m }, 0.5, &circle).unwrap();
            let b = correlation_kernel(t, SpacePoint { s, k }, SpacePoint { s: u, k: m }, 0.5, &saddle).unwrap();
            assert!((a.value() - b.value()).norm() < 1e-9);
        }
    }
}
