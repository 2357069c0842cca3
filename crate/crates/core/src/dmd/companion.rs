use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::linalg::{self, Scalar};
use crate::{Complex64, RealMatrix};

/// Regression of the last snapshot on the earlier ones.
#[derive(Debug, Clone)]
pub struct CompanionModel {
    pub coefficients: DVector<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// `|| x_{T+1} - X1 c ||_2`.
    pub residual_norm: f64,
}

impl CompanionModel {
    /// `T x T` matrix with ones on the subdiagonal and `c` in the last column.
    pub fn matrix(&self) -> RealMatrix {
        companion_matrix(&self.coefficients)
    }
}

fn companion_matrix(c: &DVector<f64>) -> RealMatrix {
    let t = c.len();
    let mut m = RealMatrix::zeros(t, t);
    for i in 1..t {
        m[(i, i - 1)] = 1.0;
    }
    m.column_mut(t - 1).copy_from(c);
    m
}

pub fn companion_dmd(x: &RealMatrix) -> Result<CompanionModel> {
    if x.ncols() < 2 || x.nrows() == 0 {
        return invalid(format!("companion DMD needs at least 2 snapshots, got {}", x.ncols()));
    }
    let t = x.ncols() - 1;
    let x1 = x.columns(0, t).into_owned();
    let last = x.column(t).into_owned();
    let coefficients = linalg::pinv(&x1, linalg::EXACT_REL_TOL)? * &last;
    let residual_norm = (&last - &x1 * &coefficients).norm();
    let eigenvalues = f64::eigenvalues(&companion_matrix(&coefficients))?;
    Ok(CompanionModel { coefficients, eigenvalues, residual_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn scalar_doubling_sequence() {
        let model = companion_dmd(&dmatrix![1.0, 2.0, 4.0]).unwrap();
        // Minimum-norm solution of c1 + 2 c2 = 4.
        assert!((model.coefficients[0] - 0.8).abs() < 1e-12);
        assert!((model.coefficients[1] - 1.6).abs() < 1e-12);
        assert!(model.residual_norm < 1e-12);
        // lambda^2 - 1.6 lambda - 0.8 = 0
        let mut re: Vec<f64> = model.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.total_cmp(b));
        assert!((re[0] + 0.4).abs() < 1e-12 && (re[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_layout() {
        let m = CompanionModel { coefficients: DVector::from_vec(vec![1.0, 2.0, 3.0]), eigenvalues: vec![], residual_norm: 0.0 }
            .matrix();
        assert_eq!(m, dmatrix![0.0, 0.0, 1.0; 1.0, 0.0, 2.0; 0.0, 1.0, 3.0]);
    }

    #[test]
    fn rejects_single_snapshot() {
        assert!(companion_dmd(&dmatrix![1.0; 2.0]).is_err());
    }
}
