//! Numerical laboratory for small-amplitude, long-wavelength waves on the
//! quartic-defocusing FPUT lattice.
//!
//! The lattice `u̇_n = q_{n+1} - q_n`, `q̇_n = V'(u_n) - V'(u_{n-1})` with
//! `V(x) = x²/2 - x⁴/24` supports counter-propagating long waves whose slow
//! amplitudes obey a defocusing mKdV equation (left-mover `f`, which may carry
//! a kink connecting distinct limits `f∓`) and a Gardner-type equation
//! (right-mover `g`), coupled through a forced wave equation for an
//! interaction field `φ`. This crate builds the full corrected ansatz
//! `u_n ≈ εf + εg + ε³φ`, `q_n ≈ εF + εG + ε³Φ - εF₋`, evaluates its residuals
//! in the lattice equations, evolves the lattice itself, and measures how the
//! approximation error scales with ε.
//!
//! Module map:
//! - [`grid`], [`spectral`], [`norms`], [`tanh_poly`]: uniform periodic grids,
//!   Fourier calculus, and the discrete norms (`ℓ²`, `ℓ²₂`, `H^k`, `H^k_n`,
//!   `X^k`, `X^k_{n±}`) used everywhere else.
//! - [`fields`]: carrier + periodic-wiggle representation of modulation
//!   fields, with exact lattice sampling at shifted arguments.
//! - [`solvers`]: pseudo-spectral integrating-factor RK4 evolution of the
//!   mKdV and Gardner equations.
//! - [`interaction`]: the interaction wave `φ`, `ψ = ∂₂φ`, and `∂₁⁻¹ψ` via
//!   the explicit variation-of-constants (Duhamel) quadrature.
//! - [`ansatz`]: wave speed, the corrected velocity fields `F`, `G`, `Φ`,
//!   ansatz assembly on the lattice, and compatible initial data.
//! - [`lattice`]: FPUT window integration, Hamiltonian, residual sequences,
//!   the error energy functional and its coercivity.
//! - [`harness`]: experiment orchestration (ε sweeps, theorem checks,
//!   meta-stability runs), slope fits, CSV/report emission.

pub mod ansatz;
pub mod config;
pub mod error;
pub mod fields;
pub mod grid;
pub mod harness;
pub mod interaction;
pub mod lattice;
pub mod norms;
pub mod selftest;
pub mod slope;
pub mod solvers;
pub mod spectral;
pub mod tanh_poly;

pub use error::{Error, Result};
