//! Spectral theory of structured random matrices `H = W·H̃·W + D`.
//!
//! `H̃` is drawn from the Gaussian unitary ensemble and `W`, `D` are diagonal.
//! The crate provides
//!
//! * [`model`]: diagonal profiles (deterministic and Gaussian-random `W`);
//! * [`mc`]: Monte Carlo sampling, diagonalization and estimators for the
//!   density of states and eigenvector moments;
//! * [`saddle`]: the two-parameter self-consistency system for an arbitrary
//!   profile and the analytic observables derived from it;
//! * [`averaged`]: the theory averaged over Gaussian `W` with `D = 0`,
//!   including closed forms, asymptotics and an independent quadrature oracle;
//! * [`fit`]: log-log regression for fractal-dimension estimates.

// Link the system OpenBLAS/LAPACK implementation.
extern crate openblas_src;

pub mod averaged;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod saddle;
pub mod special;
pub mod table;

pub use averaged::{AveragedPoint, AveragedSolution, FPair};
pub use error::{Error, Result};
pub use fit::{fractal_dimension_fit, MomentScalingFit, PowerLawFit};
pub use linalg::{EigenSystem, HermitianMatrix};
pub use mc::{BinGrid, DosBin, EnergyWindow, EnsembleReport, EnsembleSpec, MCEstimate, MomentEstimate, ProfileSource};
pub use model::{DiagonalProfile, GaussianWParams};
pub use saddle::{SaddlePoint, SpectralAnalytic};
pub use table::Table;

pub use num_complex::Complex64;
