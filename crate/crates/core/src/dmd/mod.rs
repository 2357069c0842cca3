//! Decomposition variants and the model types they produce.

mod centered;
mod companion;
mod exact;
mod frequency;
mod reconstruct;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{self, Scalar};
use crate::{Complex64, ComplexMatrix, ComplexVector};

pub use centered::{affine_dmd_direct, centered_dmd, centered_dmd_with, AffineFit, CenteredDmdModel};
pub use companion::{companion_dmd, CompanionModel};
pub use exact::{consistency_residual, exact_dmd, exact_dmd_with};
pub use reconstruct::imaginary_residue;
pub use frequency::{frequency_subtracted_dmd, frequency_subtracted_dmd_with, subtract_frequencies, FrequencyModel};

/// One-step-shifted snapshot blocks: `X1 = [x_1 .. x_T]`, `X2 = [x_2 .. x_{T+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair<T: Scalar = f64> {
    x1: DMatrix<T>,
    x2: DMatrix<T>,
}

impl<T: Scalar> SnapshotPair<T> {
    pub fn new(x1: DMatrix<T>, x2: DMatrix<T>) -> Result<Self> {
        if x1.shape() != x2.shape() {
            return invalid(format!("X1 {:?} and X2 {:?} differ in shape", x1.shape(), x2.shape()));
        }
        if x1.nrows() == 0 || x1.ncols() == 0 {
            return invalid("snapshot blocks must be nonempty");
        }
        linalg::ensure_finite(&x1, "X1")?;
        linalg::ensure_finite(&x2, "X2")?;
        Ok(Self { x1, x2 })
    }

    pub fn x1(&self) -> &DMatrix<T> {
        &self.x1
    }

    pub fn x2(&self) -> &DMatrix<T> {
        &self.x2
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.x1.nrows()
    }

    /// Number of snapshot pairs.
    pub fn t(&self) -> usize {
        self.x1.ncols()
    }
}

/// Split a trajectory `[x_1 .. x_{T+1}]` into its shifted blocks.
pub fn split_snapshots<T: Scalar>(x: &DMatrix<T>) -> Result<SnapshotPair<T>> {
    if x.ncols() < 2 {
        return invalid(format!("a trajectory needs at least 2 snapshots, got {}", x.ncols()));
    }
    let t = x.ncols() - 1;
    SnapshotPair::new(x.columns(0, t).into_owned(), x.columns(1, t).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Centered,
    Companion,
    FreqSubtracted,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Centered => "centered",
            Method::Companion => "companion",
            Method::FreqSubtracted => "freq_subtracted",
        }
    }
}

/// Tolerances shared by the SVD-based variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmdOptions {
    /// Truncation rank; `None` uses the exact-tolerance rank of `X1`.
    pub rank: Option<usize>,
    /// Relative singular value cutoff for the default rank.
    pub rank_tol: f64,
    /// Eigenvalues with `|lambda| < zero_tol * max |lambda|` get zero modes.
    pub zero_tol: f64,
    /// Distance from one below which an eigenvalue counts as a unit eigenvalue.
    pub unit_tol: f64,
}

impl Default for DmdOptions {
    fn default() -> Self {
        Self { rank: None, rank_tol: linalg::EXACT_REL_TOL, zero_tol: 1e-10, unit_tol: 1e-6 }
    }
}

impl DmdOptions {
    pub fn with_rank(rank: Option<usize>) -> Self {
        Self { rank, ..Self::default() }
    }
}

/// Rank-`r` factorization `L B^H` of the fitted propagator, where `B` holds
/// the leading left singular vectors of `X1` and `L = X2 V S^-1`.
#[derive(Debug, Clone)]
pub(crate) struct ReducedOperator {
    pub(crate) lifted: ComplexMatrix,
    pub(crate) basis: ComplexMatrix,
}

impl ReducedOperator {
    fn apply(&self, y: &ComplexVector) -> ComplexVector {
        &self.lifted * (self.basis.adjoint() * y)
    }

    fn apply_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        &self.lifted * (self.basis.adjoint() * y)
    }
}

/// Eigenvalues, modes and amplitudes of a fitted linear propagator.
#[derive(Debug, Clone)]
pub struct DmdModel {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are unit-norm modes; modes of (near) zero eigenvalues are zero.
    pub modes: ComplexMatrix,
    /// Least-squares coefficients of the first snapshot on the modes.
    pub amplitudes: Vec<Complex64>,
    pub method: Method,
    pub rank_used: usize,
    pub(crate) operator: ReducedOperator,
}

impl DmdModel {
    pub fn state_dim(&self) -> usize {
        self.modes.nrows()
    }

    /// Apply the fitted propagator to each column of `x`.
    pub fn propagate<T: Scalar>(&self, x: &DMatrix<T>) -> ComplexMatrix {
        self.operator.apply_matrix(&linalg::to_complex(x))
    }

    /// Dense `n x n` propagator. Only sensible for modest state dimension.
    pub fn operator_matrix(&self) -> ComplexMatrix {
        &self.operator.lifted * self.operator.basis.adjoint()
    }

    /// Least-squares coefficients of `x` on the nonzero modes.
    pub fn fit_amplitudes(&self, x: &ComplexVector) -> Result<Vec<Complex64>> {
        fit_on_modes(&self.modes, x)
    }
}

pub(crate) fn fit_on_modes(modes: &ComplexMatrix, x: &ComplexVector) -> Result<Vec<Complex64>> {
    let r = modes.ncols();
    if r == 0 {
        return Ok(Vec::new());
    }
    if x.len() != modes.nrows() {
        return invalid(format!("vector of length {} does not match state dimension {}", x.len(), modes.nrows()));
    }
    let active: Vec<usize> = (0..r).filter(|&j| modes.column(j).norm() > 0.0).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); r];
    if active.is_empty() {
        return Ok(out);
    }
    let sub = modes.select_columns(&active);
    let coeffs = linalg::pinv(&sub, linalg::EXACT_REL_TOL)? * x;
    for (k, &j) in active.iter().enumerate() {
        out[j] = coeffs[k];
    }
    Ok(out)
}

/// Largest modulus in a spectrum, zero when empty.
pub fn spectral_radius(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
