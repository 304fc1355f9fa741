//! Single-level transition kernels: `R`, dimension functions, Pieri sums `P_k`,
//! Jacobi polynomials and the determinantal kernels `T_k`.

use crate::error::{invalid, Result};
use crate::lattice::{interlacing_below, interlaces_unchecked, parts_on_level, Signature};
use crate::linalg::det;
use crate::quadrature::{integrate_adaptive, Estimate, QuadratureSpec};
use crate::scalar::Scalar;
use num_bigint::BigInt;
use num_complex::ComplexFloat;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Jacobi parameter `a_k`: `-1/2` on odd levels, `+1/2` on even levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JacobiParam {
    MinusHalf,
    PlusHalf,
}

impl JacobiParam {
    pub fn for_level(k: usize) -> Self {
        if k % 2 == 1 {
            JacobiParam::MinusHalf
        } else {
            JacobiParam::PlusHalf
        }
    }

    pub fn from_value(a: f64) -> Result<Self> {
        if a == -0.5 {
            Ok(JacobiParam::MinusHalf)
        } else if a == 0.5 {
            Ok(JacobiParam::PlusHalf)
        } else {
            invalid(format!("Jacobi parameter must be -1/2 or 1/2, got {a}"))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            JacobiParam::MinusHalf => -0.5,
            JacobiParam::PlusHalf => 0.5,
        }
    }
}

/// `q` together with `α = 2q/(1-q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaParam {
    pub q: f64,
    pub alpha: f64,
}

impl AlphaParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return invalid(format!("q must lie in (0,1), got {q}"));
        }
        Ok(AlphaParam { q, alpha: 2.0 * q / (1.0 - q) })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        Ok(AlphaParam { q: alpha / (2.0 + alpha), alpha })
    }
}

/// `R(x, y) = (1-q)/(1+q) (q^|x-y| + q^(x+y+1))`, the law of `{x + ξ₁ - ξ₂}`.
pub fn r_kernel<T: Scalar>(x: u32, y: u32, q: &T) -> T {
    let (x, y) = (x as i64, y as i64);
    let pre = (T::one() - q.clone()) / (T::one() + q.clone());
    pre * (q.powi((x - y).abs()) + q.powi(x + y + 1))
}

/// Dimension function `s_k(λ)`, exact.
pub fn s_dim(k: usize, lambda: &Signature) -> BigRational {
    s_dim_parts(k, lambda.parts())
}

pub(crate) fn s_dim_parts(k: usize, lambda: &[u32]) -> BigRational {
    let r = parts_on_level(k);
    debug_assert_eq!(lambda.len(), r);
    // Doubled coordinates keep the odd case (l - 1/2) integral.
    let (l, m): (Vec<i64>, Vec<i64>) = if k % 2 == 0 {
        (0..r)
            .map(|i| (lambda[i] as i64 + (r - i) as i64, (r - i) as i64))
            .unzip()
    } else {
        (0..r)
            .map(|i| {
                (2 * (lambda[i] as i64 + (r - i) as i64) - 1, 2 * (r - i) as i64 - 1)
            })
            .unzip()
    };
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..r {
        for j in i + 1..r {
            num *= BigInt::from(l[i] * l[i] - l[j] * l[j]);
            den *= BigInt::from(m[i] * m[i] - m[j] * m[j]);
        }
        if k % 2 == 0 {
            num *= BigInt::from(l[i]);
            den *= BigInt::from(m[i]);
        }
    }
    BigRational::new(num, den)
}

/// `|Σ_{λ ≺ μ} s_{k-1}(λ) - s_k(μ)|`; the sum is finite so the cap only bounds the search.
pub fn branching_check(k: usize, mu: &Signature, cap: u32) -> Result<BigRational> {
    if k < 2 {
        return invalid("branching needs k >= 2");
    }
    let mu = Signature::for_level(k, mu.0.clone())?;
    if mu.first() > cap {
        return invalid(format!("{mu} exceeds the cap {cap}"));
    }
    let total = interlacing_below(mu.parts(), parts_on_level(k - 1))
        .iter()
        .fold(BigRational::zero(), |acc, lam| acc + s_dim(k - 1, lam));
    Ok(num_traits::Signed::abs(&(total - s_dim(k, &mu))))
}

/// `det[1{λ_j - j >= c_i - i}]`, which is 1 exactly when `c ≺ λ` (equal lengths).
pub fn interlacing_det(c: &Signature, lambda: &Signature) -> Result<u8> {
    let r = c.len();
    if lambda.len() != r {
        return invalid("interlacing determinant needs equal lengths");
    }
    let m: Vec<Vec<BigRational>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let s = c.0[i] as i64 - i as i64 + r as i64;
                    let l = lambda.0[j] as i64 - j as i64 + r as i64;
                    if l >= s {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let d = det(m);
    if d.is_zero() {
        Ok(0)
    } else if d.is_one() {
        Ok(1)
    } else {
        invalid(format!("determinant {d} is not 0/1"))
    }
}

fn check_level(k: usize, s: &Signature) -> Result<()> {
    Signature::for_level(k, s.0.clone()).map(|_| ())
}

/// Pieri-sum kernel `P_k(λ, β)`.
///
/// The sum over intermediate `c` factorizes because each `c_i` is constrained
/// only by `max(λ_{i+1}, β_{i+1}) <= c_i <= min(λ_i, β_i)`.
pub fn p_kernel<T: Scalar>(k: usize, lambda: &Signature, beta: &Signature, q: &T) -> Result<T> {
    check_level(k, lambda)?;
    check_level(k, beta)?;
    Ok(p_kernel_parts(k, lambda.parts(), beta.parts(), q))
}

pub(crate) fn p_kernel_parts<T: Scalar>(k: usize, lambda: &[u32], beta: &[u32], q: &T) -> T {
    let r = parts_on_level(k);
    let nc = if k % 2 == 0 { r } else { r - 1 };
    let mut prod = T::one();
    for i in 0..nc {
        let lo = lambda.get(i + 1).copied().unwrap_or(0).max(beta.get(i + 1).copied().unwrap_or(0));
        let hi = lambda[i].min(beta[i]);
        if lo > hi {
            return T::zero();
        }
        prod = prod * geometric_block(lambda[i] as i64 + beta[i] as i64, lo as i64, hi as i64, q);
    }
    let one_minus = T::one() - q.clone();
    let ratio = T::from_rational(&(s_dim_parts(k, beta) / s_dim_parts(k, lambda)));
    let mut out = prod * one_minus.powi(2 * nc as i64) * ratio;
    if k % 2 == 1 {
        out = out * r_kernel(lambda[r - 1], beta[r - 1], q);
    }
    out
}

/// `Σ_{c=lo}^{hi} q^(total - 2c)`.
fn geometric_block<T: Scalar>(total: i64, lo: i64, hi: i64, q: &T) -> T {
    let mut acc = T::zero();
    for c in lo..=hi {
        acc = acc + q.powi(total - 2 * c);
    }
    acc
}

/// `J_{s,a}(x)` by the three-term recurrence; works over any ring (reals, complexes, rationals).
pub fn jacobi_eval<T: Clone + Num>(s: usize, a: JacobiParam, x: T) -> T {
    let mut p0 = T::one();
    if s == 0 {
        return p0;
    }
    let two_x = x.clone() + x;
    let mut p1 = match a {
        JacobiParam::PlusHalf => two_x.clone(),
        JacobiParam::MinusHalf => two_x.clone() - T::one(),
    };
    for _ in 1..s {
        let p2 = two_x.clone() * p1.clone() - p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// All of `J_{0,a}(x), …, J_{n,a}(x)`.
pub fn jacobi_table<T: Clone + Num>(n: usize, a: JacobiParam, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(T::one());
    if n == 0 {
        return out;
    }
    let two_x = x.clone() + x;
    out.push(match a {
        JacobiParam::PlusHalf => two_x.clone(),
        JacobiParam::MinusHalf => two_x.clone() - T::one(),
    });
    for s in 2..=n {
        let v = two_x.clone() * out[s - 1].clone() - out[s - 2].clone();
        out.push(v);
    }
    out
}

/// `φ(x) = (1-q)² / (1 + q² - 2qx)` for real or complex `x`.
pub fn phi_alpha<C: ComplexFloat<Real = f64>>(x: C, q: f64) -> Result<C> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0,1), got {q}"));
    }
    let one = C::one();
    let qq: C = num_traits::NumCast::from(q).expect("real embeds");
    let den = one + qq * qq - (qq + qq) * x;
    if den.abs() == 0.0 {
        return invalid(format!("φ has a pole at x = {}", (1.0 + q * q) / (2.0 * q)));
    }
    Ok((one - qq) * (one - qq) / den)
}

/// Closed form of `⟨J_{s,a}, J_{t,a} φ⟩_a`.
pub fn inner_product_closed<T: Scalar>(s: u32, t: u32, a: JacobiParam, q: &T) -> T {
    let (s, t) = (s as i64, t as i64);
    let pre = (T::one() - q.clone()) / (T::one() + q.clone());
    match a {
        JacobiParam::MinusHalf => pre * (q.powi(s + t + 1) + q.powi((s - t).abs())),
        JacobiParam::PlusHalf => pre * (q.powi((s - t).abs()) - q.powi(s + t + 2)),
    }
}

/// Weight of `⟨·,·⟩_a` after `x = cos θ`, including `dx = sin θ dθ` and the `2^(a+1/2)/π` prefactor.
pub fn theta_weight(a: JacobiParam, theta: f64) -> f64 {
    match a {
        JacobiParam::PlusHalf => 2.0 / PI * theta.sin().powi(2),
        JacobiParam::MinusHalf => (1.0 + theta.cos()) / PI,
    }
}

/// `⟨f, g⟩_a` by Gauss–Legendre in θ.
pub fn weighted_inner_product<F, G>(f: F, g: G, a: JacobiParam, quad: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    integrate_adaptive(0.0, PI, quad, |th| {
        let x = th.cos();
        f(x) * g(x) * theta_weight(a, th)
    })
}

/// `T_k(λ, μ)` from a table of `⟨J_s, J_t φ⟩` values.
pub fn t_kernel_with<T: Scalar, G: FnMut(u32, u32) -> Result<T>>(
    k: usize,
    lambda: &Signature,
    mu: &Signature,
    mut gram: G,
) -> Result<T> {
    check_level(k, lambda)?;
    check_level(k, mu)?;
    let r = parts_on_level(k);
    let lt = shifted(lambda.parts());
    let mt = shifted(mu.parts());
    let mut m = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            row.push(gram(lt[i], mt[j])?);
        }
        m.push(row);
    }
    let ratio = T::from_rational(&(s_dim(k, mu) / s_dim(k, lambda)));
    Ok(det(m) * ratio)
}

fn shifted(parts: &[u32]) -> Vec<u32> {
    crate::lattice::shift_parts(parts)
}

/// How `t_kernel` obtains the inner products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TMode {
    Closed,
    Quadrature,
}

/// `T_k(λ, μ)` in floating point, with closed-form or quadrature inner products.
pub fn t_kernel(k: usize, lambda: &Signature, mu: &Signature, q: f64, mode: TMode, quad: &QuadratureSpec) -> Result<f64> {
    AlphaParam::new(q)?;
    let a = JacobiParam::for_level(k);
    match mode {
        TMode::Closed => t_kernel_with(k, lambda, mu, |s, t| Ok(inner_product_closed(s, t, a, &q))),
        TMode::Quadrature => t_kernel_with(k, lambda, mu, |s, t| {
            weighted_inner_product(
                |x| jacobi_eval(s as usize, a, x),
                |x| jacobi_eval(t as usize, a, x) * phi_alpha(x, q).expect("x in [-1,1] is not a pole"),
                a,
                quad,
            )
            .map(|e| e.value)
        }),
    }
}

/// Gram table `⟨J_s, J_t φ⟩_a` for `s, t <= max_deg`, by quadrature.
#[derive(Clone, Debug)]
pub struct GramTable {
    pub a: JacobiParam,
    pub q: f64,
    values: Vec<Vec<f64>>,
    pub max_err: f64,
}

impl GramTable {
    pub fn quadrature(a: JacobiParam, q: f64, max_deg: usize, quad: &QuadratureSpec) -> Result<Self> {
        AlphaParam::new(q)?;
        let mut values = vec![vec![0.0; max_deg + 1]; max_deg + 1];
        let mut max_err: f64 = 0.0;
        for s in 0..=max_deg {
            for t in s..=max_deg {
                let e = weighted_inner_product(
                    |x| jacobi_eval(s, a, x),
                    |x| jacobi_eval(t, a, x) * phi_alpha(x, q).expect("x in [-1,1] is not a pole"),
                    a,
                    quad,
                )?;
                values[s][t] = e.value;
                values[t][s] = e.value;
                max_err = max_err.max(e.err_est);
            }
        }
        Ok(GramTable { a, q, values, max_err })
    }

    pub fn get(&self, s: u32, t: u32) -> Result<f64> {
        self.values
            .get(s as usize)
            .and_then(|row| row.get(t as usize))
            .copied()
            .ok_or_else(|| crate::Error::InvalidArgument(format!("degree ({s},{t}) outside the table")))
    }
}

/// Both sides of `(1-q)² Σ_{c=0}^{min(λ,β)} q^(λ+β-2c) = (1-q)/(1+q) (q^|λ-β| - q^(λ+β+2))`.
pub fn geometric_sum_identity<T: Scalar>(lambda: u32, beta: u32, q: &T) -> (T, T) {
    let total = lambda as i64 + beta as i64;
    let one_minus = T::one() - q.clone();
    let lhs = one_minus.clone() * one_minus.clone() * geometric_block(total, 0, lambda.min(beta) as i64, q);
    let rhs = one_minus / (T::one() + q.clone())
        * (q.powi((lambda as i64 - beta as i64).abs()) - q.powi(total + 2));
    (lhs, rhs)
}

/// `λ ≺ β` check on raw parts, re-exported for kernels that take slices.
pub(crate) fn below(lo: &[u32], up: &[u32]) -> bool {
    interlaces_unchecked(lo, up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_states;

    fn rat(a: i64, b: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(a, b)
    }
    fn sig(v: &[u32]) -> Signature {
        Signature(v.to_vec())
    }

    #[test]
    fn r_kernel_examples() {
        let h = rat(1, 2);
        assert_eq!(r_kernel(0, 0, &h), rat(1, 2));
        assert_eq!(r_kernel(2, 0, &h), rat(1, 8));
        assert_eq!(r_kernel(2, 0, &h), h.clone() * r_kernel(1, 0, &h));
    }

    #[test]
    fn s_dim_examples() {
        assert_eq!(s_dim(1, &sig(&[5])), rat(1, 1));
        assert_eq!(s_dim(2, &sig(&[1])), rat(2, 1));
        assert_eq!(s_dim(3, &sig(&[1, 0])), rat(3, 1));
        assert_eq!(s_dim(4, &sig(&[1, 0])), rat(4, 1));
    }

    #[test]
    fn branching_examples() {
        assert!(branching_check(4, &sig(&[1, 0]), 3).unwrap().is_zero());
        assert!(branching_check(2, &sig(&[7]), 7).unwrap().is_zero());
        assert!(branching_check(3, &sig(&[0, 0]), 0).unwrap().is_zero());
    }

    #[test]
    fn interlacing_det_examples() {
        assert_eq!(interlacing_det(&sig(&[0]), &sig(&[2])).unwrap(), 1);
        assert_eq!(interlacing_det(&sig(&[1, 0]), &sig(&[1, 0])).unwrap(), 1);
        assert_eq!(interlacing_det(&sig(&[2, 0]), &sig(&[1, 1])).unwrap(), 0);
    }

    #[test]
    fn p_kernel_examples() {
        let h = rat(1, 2);
        for x in 0..5 {
            for y in 0..5 {
                assert_eq!(p_kernel(1, &sig(&[x]), &sig(&[y]), &h).unwrap(), r_kernel(x, y, &h));
            }
        }
        assert_eq!(p_kernel(2, &sig(&[0]), &sig(&[0]), &h).unwrap(), rat(1, 4));
        assert!(p_kernel(3, &sig(&[1, 1]), &sig(&[0, 0]), &h).unwrap().is_zero());
    }

    #[test]
    fn t_closed_matches_p_small() {
        let q = rat(1, 2);
        for k in 1..=4 {
            let states = enumerate_states(k, 3);
            let a = JacobiParam::for_level(k);
            for l in &states {
                for m in &states {
                    let t: BigRational =
                        t_kernel_with(k, l, m, |s, t| Ok(inner_product_closed(s, t, a, &q))).unwrap();
                    assert_eq!(t, p_kernel(k, l, m, &q).unwrap(), "k={k} {l} {m}");
                }
            }
        }
        let zero: BigRational = t_kernel_with(3, &sig(&[1, 1]), &sig(&[0, 0]), |s, t| {
            Ok(inner_product_closed(s, t, JacobiParam::MinusHalf, &q))
        })
        .unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn jacobi_examples() {
        for &x in &[-0.7, 0.0, 0.3, 1.0] {
            assert_eq!(jacobi_eval(0, JacobiParam::PlusHalf, x), 1.0);
            assert_eq!(jacobi_eval(1, JacobiParam::PlusHalf, x), 2.0 * x);
        }
        for s in 0..20 {
            assert_eq!(jacobi_eval(s, JacobiParam::MinusHalf, 1.0), 1.0);
        }
    }

    #[test]
    fn phi_examples() {
        assert!((phi_alpha(1.0, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!((phi_alpha(0.0, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!((phi_alpha(-1.0, 0.5).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(phi_alpha(1.25, 0.5).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let h = rat(1, 2);
        assert_eq!(inner_product_closed(0, 0, JacobiParam::MinusHalf, &h), rat(1, 2));
        assert_eq!(inner_product_closed(0, 0, JacobiParam::PlusHalf, &h), rat(1, 4));
        let quad = QuadratureSpec::default();
        let one = weighted_inner_product(|_| 1.0, |_| 1.0, JacobiParam::MinusHalf, &quad).unwrap();
        assert!((one.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn geometric_identity_examples() {
        let h = rat(1, 2);
        let (l, r) = geometric_sum_identity(0, 0, &h);
        assert_eq!(l, rat(1, 4));
        assert_eq!(l, r);
        let q = rat(2, 7);
        let (l, r) = geometric_sum_identity(3, 0, &q);
        assert_eq!(l, r);
        assert_eq!(l, (rat(1, 1) - q.clone()).powi(2) * q.powi(3));
        let (l, r) = geometric_sum_identity(1, 1, &0.5f64);
        assert!((l - r).abs() < 1e-15);
    }

    #[test]
    fn alpha_roundtrip() {
        let a = AlphaParam::new(0.5).unwrap();
        assert_eq!(a.alpha, 2.0);
        assert!((AlphaParam::from_alpha(2.0).unwrap().q - 0.5).abs() < 1e-15);
    }
}
