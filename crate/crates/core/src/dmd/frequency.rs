use nalgebra::DMatrix;

use super::exact::fit_reduced;
use super::{DmdModel, DmdOptions, Method, SnapshotPair};
use crate::error::{invalid, Result};
use crate::linalg::{self, Scalar};
use crate::{Complex64, ComplexMatrix};

/// DMD after projecting out known temporal frequencies, plus their forcing vectors.
#[derive(Debug, Clone)]
pub struct FrequencyModel {
    pub base: DmdModel,
    pub fixed_lambdas: Vec<Complex64>,
    /// `n x k` coefficients `B` in `X2 = A X1 + B Lambda^T`.
    pub forcing: ComplexMatrix,
}

fn same(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * a.norm().max(b.norm()).max(1.0)
}

fn validate(lambdas: &[Complex64], t: usize) -> Result<()> {
    if lambdas.is_empty() {
        return invalid("at least one fixed eigenvalue is required");
    }
    if lambdas.len() >= t {
        return invalid(format!("{} fixed eigenvalues need more than {} snapshot pairs", lambdas.len(), t));
    }
    for (i, &a) in lambdas.iter().enumerate() {
        if !(a.re.is_finite() && a.im.is_finite()) {
            return invalid("fixed eigenvalues must be finite");
        }
        if lambdas[..i].iter().any(|&b| same(a, b)) {
            return invalid(format!("duplicate fixed eigenvalue {a}"));
        }
    }
    Ok(())
}

fn conjugate_closed(lambdas: &[Complex64]) -> bool {
    lambdas.iter().all(|&a| lambdas.iter().any(|&b| same(a.conj(), b)))
}

/// `(Lambda^T)^+`, `len x k`.
fn row_space_pinv(lambdas: &[Complex64], len: usize) -> Result<ComplexMatrix> {
    let lt = linalg::vandermonde(lambdas, len)?.transpose();
    linalg::pinv(&lt, linalg::EXACT_REL_TOL)
}

fn project_out(x: &ComplexMatrix, lambdas: &[Complex64]) -> Result<ComplexMatrix> {
    let lt = linalg::vandermonde(lambdas, x.ncols())?.transpose();
    let lt_pinv = linalg::pinv(&lt, linalg::EXACT_REL_TOL)?;
    Ok(x - (x * lt_pinv) * lt)
}

/// Remove the temporal components `lambda^j` from every row of `x`, i.e.
/// right-multiply by the projector onto the complement of the Vandermonde row space.
pub fn subtract_frequencies<T: Scalar>(x: &DMatrix<T>, lambdas: &[Complex64]) -> Result<ComplexMatrix> {
    if x.ncols() == 0 {
        return invalid("cannot project an empty matrix");
    }
    validate(lambdas, x.ncols() + 1)?;
    project_out(&linalg::to_complex(x), lambdas)
}

pub fn frequency_subtracted_dmd<T: Scalar>(
    pair: &SnapshotPair<T>,
    lambdas: &[Complex64],
    rank: Option<usize>,
) -> Result<FrequencyModel> {
    frequency_subtracted_dmd_with(pair, lambdas, &DmdOptions::with_rank(rank))
}

pub fn frequency_subtracted_dmd_with<T: Scalar>(
    pair: &SnapshotPair<T>,
    lambdas: &[Complex64],
    opts: &DmdOptions,
) -> Result<FrequencyModel> {
    validate(lambdas, pair.t())?;
    let x1 = linalg::to_complex(pair.x1());
    let x2 = linalg::to_complex(pair.x2());
    let p1 = project_out(&x1, lambdas)?;
    let p2 = project_out(&x2, lambdas)?;

    // Real data with a conjugate-closed set stays real after projection.
    let base = if T::IS_REAL && conjugate_closed(lambdas) {
        let (r1, r2) = (p1.map(|z| z.re), p2.map(|z| z.re));
        fit_reduced(&r1, &r2, opts, Method::FreqSubtracted)?.0
    } else {
        fit_reduced(&p1, &p2, opts, Method::FreqSubtracted)?.0
    };

    let forcing = (&x2 - base.propagate(&x1)) * row_space_pinv(lambdas, pair.t())?;
    Ok(FrequencyModel { base, fixed_lambdas: lambdas.to_vec(), forcing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::centered_dmd;
    use crate::RealMatrix;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn golden_pair() -> SnapshotPair {
        SnapshotPair::new(dmatrix![1.0, 3.0, 7.0; 1.0, 5.0, 17.0], dmatrix![3.0, 7.0, 15.0; 5.0, 17.0, 53.0]).unwrap()
    }

    #[test]
    fn unit_frequency_matches_centering() {
        let pair = golden_pair();
        let freq = frequency_subtracted_dmd(&pair, &[c(1.0, 0.0)], None).unwrap();
        let cent = centered_dmd(&pair, None).unwrap();
        for z in &freq.base.eigenvalues {
            assert!(cent.base.eigenvalues.iter().any(|w| (w - z).norm() < 1e-10));
            assert!(z.im.abs() < 1e-12);
        }
        // With lambda = 1 the forcing column is the bias.
        assert!((freq.forcing[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
        assert!((freq.forcing[(1, 0)] - c(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn projection_annihilates_the_frequency() {
        let x = RealMatrix::from_fn(2, 6, |i, j| (i + 1) as f64 * (-1.0f64).powi(j as i32) + j as f64);
        let p = subtract_frequencies(&x, &[c(-1.0, 0.0)]).unwrap();
        for row in 0..2 {
            let alt: Complex64 = (0..6).map(|j| p[(row, j)] * (-1.0f64).powi(j as i32)).sum();
            assert!(alt.norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_duplicates_and_too_many() {
        let pair = golden_pair();
        assert!(frequency_subtracted_dmd(&pair, &[c(1.0, 0.0), c(1.0, 0.0)], None).is_err());
        assert!(frequency_subtracted_dmd(&pair, &[c(1.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)], None).is_err());
        assert!(frequency_subtracted_dmd(&pair, &[], None).is_err());
    }

    #[test]
    fn conjugate_closure_detection() {
        assert!(conjugate_closed(&[c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]));
        assert!(!conjugate_closed(&[c(0.0, -1.0)]));
    }
}
