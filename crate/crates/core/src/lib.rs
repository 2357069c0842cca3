//! Dynamic mode decomposition with data centering.
//!
//! The crate fits linear and affine propagators to time-ordered snapshot
//! matrices and compares the resulting spectra:
//!
//! * [`dmd`] holds the decompositions: exact (SVD based), centered (equivalent
//!   to an affine fit), the companion-matrix formulation and fixed-frequency
//!   subtraction.
//! * [`linalg`] is the dense substrate: pseudoinverse, rank estimation,
//!   Vandermonde matrices and the rank-one update of a centered pseudoinverse.
//! * [`synth`] generates the trajectories used to exercise all of the above.
//! * [`analysis`] measures spectra: matched distances, noise sweeps, power spectra.
//! * [`io`] and [`experiment`] back the `cdmd` command-line tool.

pub mod analysis;
pub mod dmd;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod synth;

pub use error::{DmdError, Result};
pub use num_complex::Complex64;

pub type RealMatrix = nalgebra::DMatrix<f64>;
pub type ComplexMatrix = nalgebra::DMatrix<Complex64>;
pub type RealVector = nalgebra::DVector<f64>;
pub type ComplexVector = nalgebra::DVector<Complex64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
