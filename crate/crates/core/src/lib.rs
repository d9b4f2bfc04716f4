//! Exact dimension-splitting integrators for linear evolution equations whose
//! generator is a Kronecker sum `M = A_d ⊕ … ⊕ A_1`.
//!
//! The state is an order-`d` tensor stored column-major. Advancing it by `τ`
//! amounts to applying the small exponentials `e^{τA_μ}` along each mode
//! (a Tucker operator), which this crate does with batched strided
//! matrix–matrix products directly on the stored array.
//!
//! Module map:
//!
//! * [`tensor`]: dense tensors, μ-mode products, the Tucker operator, norms.
//! * [`linalg`]: small dense matrices, LU solves, the matrix exponential.
//! * [`kron`]: Kronecker-sum generators and the exact propagator.
//! * [`krylov`]: matrix-free Arnoldi approximation of `e^{τM}v`, used as a baseline.
//! * [`fd`]: grids and finite-difference stencils.
//! * [`hermite`]: Hermite functions, Gauss–Hermite quadrature and spectral transforms.
//! * [`problems`]: end-to-end drivers (heat, pipe flow, Schrödinger, Gross–Pitaevskii).

pub mod error;
pub mod fd;
pub mod hermite;
pub mod kron;
pub mod krylov;
pub mod linalg;
pub mod problems;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use kron::{KroneckerOp, PropagatorCache};
pub use linalg::DenseMatrix;
pub use num_complex::{Complex, Complex32, Complex64};
pub use scalar::{RealScalar, Scalar};
pub use tensor::{NormKind, Shape, Tensor};
