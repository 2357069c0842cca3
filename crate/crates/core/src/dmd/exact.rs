use nalgebra::DMatrix;

use super::{fit_on_modes, DmdModel, DmdOptions, Method, ReducedOperator, SnapshotPair};
use crate::error::{DmdError, Result};
use crate::linalg::{self, Scalar};
use crate::ComplexMatrix;

/// Reduced factors kept in the original scalar field, for callers that need
/// more than the spectrum (bias and fixed point of the centered model).
pub(crate) struct Factors<T: Scalar> {
    /// `X2 V S^-1`, `n x r`.
    pub(crate) lifted: DMatrix<T>,
    /// Leading `r` left singular vectors of `X1`.
    pub(crate) basis: DMatrix<T>,
    /// `basis^H lifted`, `r x r`.
    pub(crate) reduced: DMatrix<T>,
}

pub(crate) fn fit_reduced<T: Scalar>(
    x1: &DMatrix<T>,
    x2: &DMatrix<T>,
    opts: &DmdOptions,
    method: Method,
) -> Result<(DmdModel, Factors<T>)> {
    let n = x1.nrows();
    let dec = linalg::svd(x1)?;
    let available = dec.count_above(opts.rank_tol);
    let r = match opts.rank {
        Some(r) if r > available => return Err(DmdError::RankTooHigh { requested: r, available }),
        Some(r) => r,
        None => available,
    };

    let basis = dec.u.columns(0, r).into_owned();
    let mut lifted = x2 * dec.vt.rows(0, r).adjoint();
    for (j, mut col) in lifted.column_iter_mut().enumerate() {
        col.unscale_mut(dec.s[j]);
    }
    let reduced = basis.adjoint() * &lifted;

    let (eigenvalues, w) = linalg::eigen_decompose(&reduced)?;
    let lifted_c = linalg::to_complex(&lifted);
    let radius = super::spectral_radius(&eigenvalues);
    let mut modes = ComplexMatrix::zeros(n, r);
    for (k, &lam) in eigenvalues.iter().enumerate() {
        if radius == 0.0 || lam.norm() < opts.zero_tol * radius {
            continue;
        }
        let mut phi = (&lifted_c * w.column(k)) / lam;
        linalg::canonicalize(&mut phi);
        modes.set_column(k, &phi);
    }

    let first = linalg::to_complex(x1).column(0).into_owned();
    let amplitudes = fit_on_modes(&modes, &first)?;
    let operator = ReducedOperator { lifted: lifted_c, basis: linalg::to_complex(&basis) };
    let model = DmdModel { eigenvalues, modes, amplitudes, method, rank_used: r, operator };
    Ok((model, Factors { lifted, basis, reduced }))
}

/// Exact DMD at rank `rank` (default: exact-tolerance rank of `X1`).
pub fn exact_dmd<T: Scalar>(pair: &SnapshotPair<T>, rank: Option<usize>) -> Result<DmdModel> {
    exact_dmd_with(pair, &DmdOptions::with_rank(rank))
}

pub fn exact_dmd_with<T: Scalar>(pair: &SnapshotPair<T>, opts: &DmdOptions) -> Result<DmdModel> {
    fit_reduced(pair.x1(), pair.x2(), opts, Method::Exact).map(|(m, _)| m)
}

/// `|| X2 (I - X1^+ X1) ||_F`: zero exactly when some linear map sends `X1` to `X2`.
pub fn consistency_residual<T: Scalar>(pair: &SnapshotPair<T>) -> Result<f64> {
    Ok(linalg::residual_after_projection(pair.x2(), pair.x1())?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::split_snapshots;
    use crate::{Complex64, RealMatrix};
    use nalgebra::dmatrix;

    fn diag_trajectory(d: &[f64], x1: &[f64], steps: usize) -> RealMatrix {
        RealMatrix::from_fn(d.len(), steps + 1, |i, j| x1[i] * d[i].powi(j as i32))
    }

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|z| z.re).collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    #[test]
    fn diagonal_system_spectrum() {
        let x = diag_trajectory(&[0.9, 0.5], &[1.0, 1.0], 10);
        let pair = split_snapshots(&x).unwrap();
        let model = exact_dmd(&pair, None).unwrap();
        assert_eq!(model.rank_used, 2);
        let got = sorted_re(&model.eigenvalues);
        assert!((got[0] - 0.5).abs() < 1e-10 && (got[1] - 0.9).abs() < 1e-10);
        assert!(model.eigenvalues.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn constant_data_has_unit_eigenvalue() {
        let x = RealMatrix::from_fn(3, 6, |i, _| [2.0, -1.0, 0.5][i]);
        let model = exact_dmd(&split_snapshots(&x).unwrap(), None).unwrap();
        assert_eq!(model.eigenvalues.len(), 1);
        assert!((model.eigenvalues[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{:?}", model.eigenvalues);
        let phi = model.modes.column(0);
        let x1 = x.column(0);
        let cos = (0..3).map(|i| phi[i].re * x1[i]).sum::<f64>() / x1.norm();
        assert!((cos.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_too_high_is_reported() {
        let x = diag_trajectory(&[0.9, 0.5], &[1.0, 1.0], 4);
        let pair = split_snapshots(&x).unwrap();
        match exact_dmd(&pair, Some(3)) {
            Err(DmdError::RankTooHigh { requested: 3, available: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_data_gives_empty_model() {
        let pair = SnapshotPair::new(RealMatrix::zeros(2, 3), RealMatrix::zeros(2, 3)).unwrap();
        let model = exact_dmd(&pair, None).unwrap();
        assert_eq!(model.rank_used, 0);
        assert!(model.eigenvalues.is_empty());
    }

    #[test]
    fn nilpotent_direction_gets_zero_mode() {
        // A = diag(0.5, 0): second coordinate vanishes after one step.
        let x1 = dmatrix![1.0, 0.5; 1.0, 0.0];
        let x2 = dmatrix![0.5, 0.25; 0.0, 0.0];
        let model = exact_dmd(&SnapshotPair::new(x1, x2).unwrap(), None).unwrap();
        let zero = model.eigenvalues.iter().position(|z| z.norm() < 1e-12).unwrap();
        assert_eq!(model.modes.column(zero).norm(), 0.0);
        assert_eq!(model.amplitudes[zero], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn consistency_residual_linear_is_zero() {
        let x = diag_trajectory(&[0.9, 0.5, -0.3], &[1.0, 2.0, 1.0], 8);
        let pair = split_snapshots(&x).unwrap();
        assert!(consistency_residual(&pair).unwrap() < 1e-10 * pair.x2().norm());
    }
}
