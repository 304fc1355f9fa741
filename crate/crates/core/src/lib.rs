//! Interlacing particle system with a partially reflecting wall.
//!
//! * [`lattice`]: signatures, interlacing, shifted coordinates, enumeration.
//! * [`dynamics`]: the push/block sampler with counter-based random streams.
//! * [`kernels`]: `R`, dimension functions, Pieri kernels `P_k`, Jacobi kernels `T_k`.
//! * [`projection`]: two-time kernels and the intertwining machinery.
//! * [`correlation`]: the correlation kernel `K_T` and Monte Carlo comparison.
//! * [`compare`]: ensembles against exact laws, with pooled z-score families.
//! * [`asymptotics`]: Pearcey and discrete Jacobi limits and convergence tables.
//!
//! The exact kernels are generic over [`Scalar`]; use [`Rational`] for exact
//! identity checks and `f64` elsewhere.

pub mod error;
pub mod scalar;
pub mod linalg;
pub mod quadrature;
pub mod lattice;
pub mod dynamics;
pub mod kernels;
pub mod kernel_matrix;
pub mod projection;
pub mod stats;
pub mod correlation;
pub mod compare;
pub mod asymptotics;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;
/// Exact truncated kernel on pair states.
pub type RationalKernel<R, C> = kernel_matrix::KernelMatrix<R, C, Rational>;
/// Floating-point truncated kernel.
pub type FloatKernel<R, C> = kernel_matrix::KernelMatrix<R, C, f64>;

/// Exact rational `num/den`.
pub fn rational(num: i64, den: i64) -> Rational {
    <Rational as Scalar>::from_ratio(num, den)
}
