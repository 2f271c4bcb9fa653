//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Fourier zero mode of a field that must be mean-free exceeds its
    /// tolerance (non-decaying forcing, excluded by the decay assumptions).
    #[error("zero mode too large: |mean| = {mean:.3e} exceeds tolerance {tol:.3e}")]
    ZeroMode { mean: f64, tol: f64 },

    /// A field that must decay (or approach its limits) at the ends of its
    /// representation window does not; the domain is too small.
    #[error("tail mismatch in {context}: edge value {value:.3e} exceeds tolerance {tol:.3e}")]
    TailMismatch {
        context: &'static str,
        value: f64,
        tol: f64,
    },

    /// The zero-sum hypothesis of the partial-sum lemma (or the lattice
    /// compatibility condition built on it) fails.
    #[error("sum mismatch: |sum| = {sum:.3e} exceeds tolerance {tol:.3e}")]
    SumMismatch { sum: f64, tol: f64 },

    /// A time integration blew up.
    #[error("step instability at t = {t:.6}: amplitude {amp:.3e} exceeds {limit:.3e}")]
    StepInstability { t: f64, amp: f64, limit: f64 },

    /// Signal reached the clamped boundary of the lattice window.
    #[error("boundary contaminated at t = {t:.6}: gauge {gauge:.3e} exceeds {limit:.3e}")]
    BoundaryContaminated { t: f64, gauge: f64, limit: f64 },

    /// Doubling the Duhamel quadrature resolution changes the interaction
    /// field by more than the resolution tolerance.
    #[error("quadrature unresolved: refinement changed output by {change:.3e} (tol {tol:.3e})")]
    QuadratureUnresolved { change: f64, tol: f64 },

    /// A slope fit was requested on degenerate or non-positive data.
    #[error("fit unstable: {0}")]
    FitUnstable(String),

    /// Fewer than three points or coincident abscissae.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
