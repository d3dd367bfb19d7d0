//! Numerical laboratory for magnetic double-well tunneling.
//!
//! A radial "planet" well decorated with small "sophon" wells is placed
//! twice, mirrored through the origin, in a uniform magnetic field. The
//! crate discretizes the magnetic Hamiltonian `(P - λ/2 X^⊥)² + V` on a
//! square grid with Peierls phases, computes low-lying spectra and parity
//! sectors, and evaluates the hopping coefficient ρ and the signed
//! splitting `E_odd - E_even` as the sophon offset ȳ varies.

pub mod eigensolve;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod operator;
pub mod params;
pub mod point;
pub mod potential;
pub mod quadrature;
pub mod tunneling;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use point::Point;
