//! Approximation of periodic functions `f = φ_λ * g` by linear combinations of
//! equispaced translates of a single generator `φ_β`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sequences`]: coefficient sequences `λ`, `β` and their structural probes.
//! * [`spectral`]: band-limited trigonometric polynomials on the torus `T^d`.
//! * [`approximant`] / [`approximant_md`]: the translate operator `Q_m` in one
//!   and several variables, its weights and its exact spectral image.
//! * [`error_budget`]: the theoretical error budgets `ε_m` and rate laws.
//! * [`lower_bound`]: the hard sign-polynomial family and a heuristic
//!   best-translate fitter used to probe lower bounds.
//! * [`experiments`]: sweeps, rate fitting, CSV output and configuration.
//!
//! Fourier convention: analysis uses `e^{-i(k,x)}`, synthesis `e^{+i(k,x)}`,
//! and all norms carry the `(2π)^{-d}` normalisation, so `‖e^{ikx}‖_p = 1`.

pub mod approximant;
pub mod approximant_md;
pub mod error;
pub mod error_budget;
pub mod experiments;
pub mod lower_bound;
pub mod sequences;
pub mod spectral;

mod fft;

pub use error::{Error, Result};
pub use num_complex::Complex64;
