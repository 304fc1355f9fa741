//! Small dense determinants.

use crate::scalar::Scalar;
use num_complex::Complex64;
use num_traits::{One, Zero};

/// Determinant by Gaussian elimination with partial pivoting (largest magnitude).
/// Exact for rational scalars.
pub fn det<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut d = T::one();
    for c in 0..n {
        let mut p = c;
        for i in c + 1..n {
            if m[i][c].abs() > m[p][c].abs() {
                p = i;
            }
        }
        if m[p][c].is_zero() {
            return T::zero();
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let pivot = m[c][c].clone();
        d = d * pivot.clone();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() / pivot.clone();
            for j in c..n {
                let t = f.clone() * m[c][j].clone();
                m[i][j] = m[i][j].clone() - t;
            }
        }
    }
    d
}

/// Complex determinant with partial pivoting.
pub fn det_complex(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut d = Complex64::one();
    for c in 0..n {
        let mut p = c;
        for i in c + 1..n {
            if m[i][c].norm() > m[p][c].norm() {
                p = i;
            }
        }
        if m[p][c].norm() == 0.0 {
            return Complex64::zero();
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let pivot = m[c][c];
        d *= pivot;
        for i in c + 1..n {
            let f = m[i][c] / pivot;
            for j in c..n {
                let t = f * m[c][j];
                m[i][j] -= t;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn small_dets() {
        assert_eq!(det(vec![vec![2.0, 1.0], vec![1.0, 3.0]]), 5.0);
        let r = |a: i64, b: i64| <BigRational as Scalar>::from_ratio(a, b);
        let m = vec![
            vec![r(0, 1), r(1, 2), r(1, 1)],
            vec![r(1, 3), r(0, 1), r(2, 1)],
            vec![r(1, 1), r(1, 1), r(1, 1)],
        ];
        // 0*(0-2) - 1/2*(1/3-2) + 1*(1/3-0) = 5/6 + 1/3
        assert_eq!(det(m), r(7, 6));
        let c = det_complex(vec![
            vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, -1.0)],
        ]);
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }
}
