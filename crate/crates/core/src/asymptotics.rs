//! Symmetric Pearcey and discrete Jacobi limit kernels, scaling maps, and det-level
//! convergence tables for the finite-`N` correlation kernel.

use crate::correlation::{kernel_matrix, ContourSpec, SpacePoint};
use crate::error::{invalid, Error, Result};
use crate::kernels::{jacobi_eval, AlphaParam, JacobiParam};
use crate::linalg::{det, det_complex};
use crate::quadrature::{integrate_adaptive, GaussLegendre, QuadratureSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Point `(ν, η)` of the Pearcey chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PearceyPoint {
    pub nu: f64,
    pub eta: f64,
}

impl PearceyPoint {
    pub fn new(nu: f64, eta: f64) -> Result<Self> {
        if !(nu >= 0.0) || !eta.is_finite() {
            return invalid(format!("Pearcey points need ν >= 0 and finite η, got ({nu}, {eta})"));
        }
        Ok(PearceyPoint { nu, eta })
    }
}

/// Constants of both limit regimes for a given `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub q: f64,
    pub alpha: f64,
    /// `(1+α)^-2 (α(2+α))^(1/2)`.
    pub c_alpha: f64,
    /// Critical density `1 - (1+α)^-2`.
    pub threshold: f64,
}

impl ScalingParams {
    pub fn new(q: f64) -> Result<Self> {
        let AlphaParam { alpha, .. } = AlphaParam::new(q)?;
        let c_alpha = (1.0 + alpha).powi(-2) * (alpha * (2.0 + alpha)).sqrt();
        Ok(ScalingParams { q, alpha, c_alpha, threshold: 1.0 - (1.0 + alpha).powi(-2) })
    }

    /// `θ = 1 + 2l / ((l - t)(2α + α²))`. Lies in `(-1, 1)` inside the non-trivial regime.
    pub fn theta(&self, t: f64, l: f64) -> Result<f64> {
        if !(t > 0.0) || !(l >= 0.0) || l == t {
            return invalid(format!("θ needs t > 0, l >= 0, l != t; got t={t}, l={l}"));
        }
        let a = self.alpha;
        Ok(1.0 + 2.0 * l / ((l - t) * (2.0 * a + a * a)))
    }

    /// Whether `(t, l)` lies in the regime whose limit is identically 1.
    pub fn trivial_regime(&self, t: f64, l: f64) -> bool {
        l >= self.threshold * t
    }
}

/// Truncations and node counts for the Pearcey double integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PearceySpec {
    /// Substitution scale `c` in `x -> cx`, `u -> cu` (1 is the unsubstituted integral).
    pub scale: f64,
    pub nodes: usize,
    /// Half-width of the `y`-range for `u = iy` before scaling.
    pub y_max: f64,
    pub tol: f64,
    pub max_doublings: u32,
}

impl Default for PearceySpec {
    fn default() -> Self {
        PearceySpec { scale: 1.0, nodes: 256, y_max: 20.0, tol: 1e-9, max_doublings: 3 }
    }
}

/// Value with error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitValue {
    pub value: f64,
    pub imag: f64,
    pub err_est: f64,
}

/// Gaussian term present when `η₂ < η₁`.
fn pearcey_indicator(p1: PearceyPoint, p2: PearceyPoint) -> f64 {
    if p2.eta < p1.eta {
        let d = p2.eta - p1.eta;
        ((p1.nu + p2.nu).powi(2) / d).exp() + ((p1.nu - p2.nu).powi(2) / d).exp()
    } else {
        return 0.0;
    }
    .max(0.0)
        / (PI * (p1.eta - p2.eta)).sqrt()
}

/// Double-integral part, computed by writing `1/(u - x) = -∫₀^∞ e^{s(u-x)} ds`
/// (valid since `Re(u - x) = -x < 0`), which separates the `x` and `u` integrals.
/// With `x = t²` the `x`-side becomes smooth at the origin.
fn pearcey_double(p1: PearceyPoint, p2: PearceyPoint, c: f64, n: usize, y_max: f64) -> Complex64 {
    let (n1, e1, n2, e2) = (p1.nu, p1.eta, p2.nu, p2.eta);
    if n1 == 0.0 || n2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s_max = 6.0 * c + 0.5 * c * e2.abs() + 2.0 * (n2 + 1.0) * c.sqrt() + 10.0;
    let t_max = 320f64.powf(0.25) / c.sqrt() * 1.3 + e1.abs();
    let y_max = y_max / c;
    let gl = GaussLegendre::cached(n);
    let ts: Vec<(f64, f64)> = gl
        .on_interval(0.0, t_max)
        .map(|(t, w)| {
            let f = 2.0 * t * (-c * c * t.powi(4) / 8.0 - c * e1 * t * t / 2.0).exp() * (n1 * (2.0 * c).sqrt() * t).sin();
            (t * t, f * w)
        })
        .collect();
    let ys: Vec<(f64, Complex64)> = gl
        .on_interval(-y_max, y_max)
        .map(|(y, w)| {
            let su = Complex64::new(0.0, y).sqrt();
            let h = if y == 0.0 {
                Complex64::new(n2 * (2.0 * c).sqrt(), 0.0)
            } else {
                (n2 * (2.0 * c).sqrt() * su).sin() / su
            };
            let g = Complex64::new(-c * c * y * y / 8.0, c * e2 * y / 2.0).exp();
            (y, g * h * w)
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, ws) in gl.on_interval(0.0, s_max) {
        let a: f64 = ts.iter().map(|&(t2, f)| (-s * t2).exp() * f).sum();
        let b: Complex64 = ys.iter().map(|&(y, f)| Complex64::from_polar(1.0, s * y) * f).sum();
        acc += ws * a * b;
    }
    -(2f64.sqrt() * c.sqrt() / (2.0 * PI * PI)) * acc
}

/// Symmetric Pearcey kernel `𝒦((ν₁,η₁),(ν₂,η₂))`.
pub fn pearcey_kernel(p1: PearceyPoint, p2: PearceyPoint, spec: &PearceySpec) -> Result<LimitValue> {
    PearceyPoint::new(p1.nu, p1.eta)?;
    PearceyPoint::new(p2.nu, p2.eta)?;
    if !(spec.scale > 0.0) {
        return invalid("Pearcey substitution scale must be positive");
    }
    let ind = pearcey_indicator(p1, p2);
    let mut n = spec.nodes;
    let mut prev = pearcey_double(p1, p2, spec.scale, n, spec.y_max);
    for _ in 0..=spec.max_doublings {
        n *= 2;
        let next = pearcey_double(p1, p2, spec.scale, n, spec.y_max);
        let err = (next - prev).norm();
        if err <= spec.tol * next.norm().max(1.0) {
            return Ok(LimitValue { value: next.re + ind, imag: next.im, err_est: err });
        }
        prev = next;
    }
    Err(Error::NumericalFailure(format!(
        "Pearcey kernel at ({},{}),({},{}) did not converge with {n} nodes",
        p1.nu, p1.eta, p2.nu, p2.eta
    )))
}

/// Discrete Jacobi kernel `L(r₁,a₁,s₁; r₂,a₂,s₂; b; u)`.
#[allow(clippy::too_many_arguments)]
pub fn discrete_jacobi_kernel(
    r1: i64,
    a1: JacobiParam,
    s1: u32,
    r2: i64,
    a2: JacobiParam,
    s2: u32,
    b: f64,
    u: f64,
    spec: &QuadratureSpec,
) -> Result<LimitValue> {
    if !(u > -1.0 && u < 1.0) {
        return invalid(format!("u must lie in (-1, 1), got {u}"));
    }
    let d = r1 - r2;
    let p = d as f64 + a1.value();
    let pre = 2f64.powf(a1.value() + 0.5) / PI;
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let upper = 2.0 * r1 as f64 + a1.value() >= 2.0 * r2 as f64 + a2.value();
    let th_u = u.acos();
    let (th0, th1, orient) = if upper { (0.0, th_u, 1.0) } else { (th_u, PI, -1.0) };
    let est = integrate_adaptive(th0, th1, spec, |th| {
        let x = th.cos();
        let lw = p * (2.0 * (0.5 * th).sin().powi(2)).ln() + b * (2.0 * (0.5 * th).cos().powi(2)).ln() + th.sin().ln();
        jacobi_eval(s1 as usize, a1, x) * jacobi_eval(s2 as usize, a2, x) * lw.exp()
    })?;
    Ok(LimitValue { value: orient * sign * pre * est.value, imag: 0.0, err_est: pre * est.err_est })
}

/// A Pearcey chart point with the parity of the level it is mapped to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub point: PearceyPoint,
    pub a: JacobiParam,
}

/// Lattice arguments of the finite-`N` kernel for one chart point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MappedPoint {
    pub lattice: SpacePoint,
    pub r: i64,
    /// Chart point that the rounded lattice point represents exactly, accounting for the
    /// index offset of `J_{s,a}` near `x = -1` (`s + 1` for `a = 1/2`, `s + 1/2` for `a = -1/2`).
    pub effective: PearceyPoint,
}

/// Finite-`N` data for the Pearcey regime.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PearceyMapping {
    pub n: u32,
    pub time: u32,
    pub points: Vec<MappedPoint>,
    /// `N^(1/4) c_α^(1/2)`: multiplies `K_N - I` to approach `𝒦` at determinant level.
    pub normalization: f64,
}

/// `s = round(ν c^(1/2) N^(1/4))`, `r = round(θ_c N + c η N^(1/2))`, `k = 2r + a - 1/2`, `T = N`.
pub fn scaling_map_pearcey(points: &[ChartPoint], n: u32, q: f64) -> Result<PearceyMapping> {
    let sp = ScalingParams::new(q)?;
    let nf = n as f64;
    let c = sp.c_alpha;
    let mut out = Vec::with_capacity(points.len());
    for cp in points {
        PearceyPoint::new(cp.point.nu, cp.point.eta)?;
        let s = (cp.point.nu * c.sqrt() * nf.powf(0.25)).round();
        let r = (sp.threshold * nf + c * cp.point.eta * nf.sqrt()).round();
        if s < 0.0 || r < 1.0 {
            return invalid(format!("point ({}, {}) maps outside the lattice at N={n}", cp.point.nu, cp.point.eta));
        }
        let r = r as i64;
        let k = match cp.a {
            JacobiParam::PlusHalf => 2 * r,
            JacobiParam::MinusHalf => 2 * r - 1,
        };
        let offset = match cp.a {
            JacobiParam::PlusHalf => 1.0,
            JacobiParam::MinusHalf => 0.5,
        };
        let effective = PearceyPoint {
            nu: (s + offset) / (c.sqrt() * nf.powf(0.25)),
            eta: (r as f64 - sp.threshold * nf) / (c * nf.sqrt()),
        };
        out.push(MappedPoint { lattice: SpacePoint { s: s as u32, k: k as usize }, r, effective });
    }
    Ok(PearceyMapping { n, time: n, points: out, normalization: nf.powf(0.25) * c.sqrt() })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub det_finite: f64,
    pub det_limit: f64,
    pub abs_err: f64,
    /// Limit determinant at the chart points the lattice points represent exactly.
    pub det_limit_effective: f64,
    pub abs_err_effective: f64,
    /// Largest quadrature error estimate among the entries used.
    pub err_est: f64,
}

fn det_real(m: Vec<Vec<f64>>) -> f64 {
    det(m)
}

/// Det-level comparison of `N^(1/4) c^(1/2) (K_N - I)` with `𝒦` for each `N`.
pub fn convergence_diagnostic_pearcey(
    points: &[ChartPoint],
    q: f64,
    ns: &[u32],
    contour: &ContourSpec,
    spec: &PearceySpec,
) -> Result<Vec<DiagnosticRow>> {
    let limit_matrix = |pts: &[PearceyPoint]| -> Result<(f64, f64)> {
        let mut err: f64 = 0.0;
        let mut m = vec![vec![0.0; pts.len()]; pts.len()];
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                let v = pearcey_kernel(*a, *b, spec)?;
                err = err.max(v.err_est);
                m[i][j] = v.value;
            }
        }
        Ok((det_real(m), err))
    };
    let nominal: Vec<PearceyPoint> = points.iter().map(|c| c.point).collect();
    let (det_limit, lim_err) = limit_matrix(&nominal)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let map = scaling_map_pearcey(points, n, q)?;
        let lattice: Vec<SpacePoint> = map.points.iter().map(|m| m.lattice).collect();
        let mut uniq = lattice.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != lattice.len() {
            return invalid(format!("two chart points collide on the lattice at N={n}"));
        }
        let (mut km, kerr) = kernel_matrix(map.time, &lattice, q, contour)?;
        for (i, row) in km.iter_mut().enumerate() {
            row[i] -= Complex64::new(1.0, 0.0);
            for v in row.iter_mut() {
                *v *= map.normalization;
            }
        }
        let det_finite = det_complex(km).re;
        let eff: Vec<PearceyPoint> = map.points.iter().map(|m| m.effective).collect();
        let (det_eff, eff_err) = limit_matrix(&eff)?;
        rows.push(DiagnosticRow {
            n,
            det_finite,
            det_limit,
            abs_err: (det_finite - det_limit).abs(),
            det_limit_effective: det_eff,
            abs_err_effective: (det_finite - det_eff).abs(),
            err_est: (kerr * map.normalization).max(lim_err).max(eff_err),
        });
    }
    Ok(rows)
}

/// Point of the discrete Jacobi regime: fixed position, level offset and parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiPoint {
    pub s: u32,
    pub r_offset: i64,
    pub a: JacobiParam,
}

/// Det-level comparison of `K_T` at `T = round(tN)`, `r_i = round(lN) + offset_i` with its limit.
pub fn convergence_diagnostic_jacobi(
    points: &[JacobiPoint],
    t: f64,
    l: f64,
    q: f64,
    ns: &[u32],
    contour: &ContourSpec,
    quad: &QuadratureSpec,
) -> Result<Vec<DiagnosticRow>> {
    let sp = ScalingParams::new(q)?;
    let trivial = sp.trivial_regime(t, l);
    let (det_limit, lim_err) = if trivial {
        (1.0, 0.0)
    } else {
        let theta = sp.theta(t, l)?;
        let mut err: f64 = 0.0;
        let mut m = vec![vec![0.0; points.len()]; points.len()];
        for (i, p) in points.iter().enumerate() {
            for (j, w) in points.iter().enumerate() {
                let v = discrete_jacobi_kernel(p.r_offset, p.a, p.s, w.r_offset, w.a, w.s, 0.5, theta, quad)?;
                err = err.max(v.err_est);
                m[i][j] = v.value;
            }
        }
        (det_real(m), err)
    };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let nf = n as f64;
        let time = (t * nf).round() as u32;
        let base = (l * nf).round() as i64;
        let mut lattice = Vec::with_capacity(points.len());
        for p in points {
            let r = base + p.r_offset;
            if r < 1 {
                return invalid(format!("level offset {} gives r < 1 at N={n}", p.r_offset));
            }
            let k = match p.a {
                JacobiParam::PlusHalf => 2 * r,
                JacobiParam::MinusHalf => 2 * r - 1,
            };
            lattice.push(SpacePoint { s: p.s, k: k as usize });
        }
        let (km, kerr) = kernel_matrix(time, &lattice, q, contour)?;
        let det_finite = det_complex(km).re;
        rows.push(DiagnosticRow {
            n,
            det_finite,
            det_limit,
            abs_err: (det_finite - det_limit).abs(),
            det_limit_effective: det_limit,
            abs_err_effective: (det_finite - det_limit).abs(),
            err_est: kerr.max(lim_err),
        });
    }
    Ok(rows)
}

/// True when successive errors never grow by more than `slack` (absolute).
pub fn non_increasing(errors: &[f64], slack: f64) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let sp = ScalingParams::new(0.5).unwrap();
        assert!((sp.c_alpha - 2.0 * 2f64.sqrt() / 9.0).abs() < 1e-15);
        assert!((sp.theta(1.0, 0.1).unwrap() - (1.0 - 1.0 / 36.0)).abs() < 1e-15);
        assert!(sp.trivial_regime(1.0, 0.95));
        assert!(!sp.trivial_regime(1.0, 0.1));
    }

    #[test]
    fn zero_nu_leaves_indicator_only() {
        let spec = PearceySpec::default();
        let a = PearceyPoint { nu: 0.0, eta: 0.4 };
        let b = PearceyPoint { nu: 1.0, eta: 0.1 };
        let v = pearcey_kernel(a, b, &spec).unwrap();
        assert!((v.value - pearcey_indicator(a, b)).abs() < 1e-15);
        let v = pearcey_kernel(b, a, &spec).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn mapping_centering() {
        let pts = [ChartPoint { point: PearceyPoint { nu: 0.0, eta: 0.0 }, a: JacobiParam::PlusHalf }];
        for n in [50u32, 100, 200] {
            let m = scaling_map_pearcey(&pts, n, 0.5).unwrap();
            assert_eq!(m.points[0].lattice.s, 0);
            assert_eq!(m.points[0].r, (8.0 * n as f64 / 9.0).round() as i64);
        }
    }

    #[test]
    fn jacobi_orthonormal_limit() {
        let quad = QuadratureSpec::default();
        let u = -1.0 + 1e-14;
        for s in 0..5u32 {
            let v = discrete_jacobi_kernel(3, JacobiParam::PlusHalf, s, 3, JacobiParam::PlusHalf, s, 0.5, u, &quad).unwrap();
            assert!((v.value - 1.0).abs() < 1e-10);
        }
        assert!(discrete_jacobi_kernel(0, JacobiParam::PlusHalf, 0, 0, JacobiParam::PlusHalf, 0, 0.5, 1.0, &quad).is_err());
    }
}
