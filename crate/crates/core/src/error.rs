use thiserror::Error;

/// Errors produced by the numerical and Monte Carlo routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A denominator `(E - d_i - w_i^2 t)^2 + w_i^4 s^2` vanished. `site` is 1-based.
    #[error("singular denominator at site {site}")]
    Singularity { site: usize },

    #[error("no convergence after {iterations} iterations: residual {residual:.3e} at (t, s) = ({t}, {s})")]
    Convergence {
        iterations: usize,
        residual: f64,
        t: f64,
        s: f64,
    },

    #[error("no solution with s > 0 at E = {energy}: energy lies outside the spectrum")]
    SpectralEdge { energy: f64 },

    #[error("energy window centred at {center} contains no eigenstates")]
    EmptyWindow { center: f64 },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("{what}: imaginary part {imag:.3e} exceeds tolerance {tol:.1e}")]
    Consistency {
        what: &'static str,
        imag: f64,
        tol: f64,
    },

    #[error("argument out of representable range: {0}")]
    Range(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
