//! Finite-dimensional machinery for complex-time-ordered exponentials and the
//! Gell-Mann–Low ratio.
//!
//! The crate is organized around five layers:
//!
//! * [`operator_core`] — dense Hermitian spectral calculus (eigendecomposition,
//!   spectral projectors, functional calculus, complex-time propagators).
//! * [`contour`] — piecewise-linear contours in ℂ with the induced order
//!   relation and composite Gauss–Legendre quadrature.
//! * [`fock`] — truncated boson/fermion Fock spaces, creation/annihilation
//!   operators, second quantization, fermionic normal ordering.
//! * [`dyson`] — interaction-picture operators, the iterated-integral terms of
//!   the time-ordered exponential, tail-bound certificates, and time-ordered
//!   products with operator insertions.
//! * [`gml`] — ground-state extraction, m-point Green's functions, and the
//!   vacuum-ratio sweep that exhibits the adiabatic `T → ∞(1 − iε)` limit.
//! * [`qed`] — a cutoff QED toy model on a finite momentum lattice feeding the
//!   layers above.
//!
//! All values are immutable after construction and safe to share across
//! threads for reads.

pub mod contour;
pub mod dyson;
pub mod error;
pub mod fock;
pub mod gml;
pub mod operator_core;
pub mod qed;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<Complex64>;
