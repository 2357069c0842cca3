use nalgebra::{DMatrix, DVector};

use super::exact::fit_reduced;
use super::{DmdModel, DmdOptions, Method, SnapshotPair};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::{RealMatrix, RealVector};

/// DMD of the mean-subtracted blocks together with the affine offset it implies.
#[derive(Debug, Clone)]
pub struct CenteredDmdModel {
    pub base: DmdModel,
    /// `mu2 - Abar mu1`.
    pub bias: RealVector,
    /// Solution of `(I - Abar) c = bias`; absent when an eigenvalue is within `unit_tol` of one.
    pub fixed_point: Option<RealVector>,
    pub mean_x1: RealVector,
    pub mean_x2: RealVector,
}

impl CenteredDmdModel {
    /// Apply the centered propagator `Abar` to a real vector.
    pub fn apply_operator(&self, y: &RealVector) -> RealVector {
        self.base.propagate(&RealMatrix::from_column_slice(y.len(), 1, y.as_slice())).column(0).map(|z| z.re)
    }

    /// Recompute `mu2 - Abar mu1` from the stored means.
    pub fn recompute_bias(&self) -> RealVector {
        &self.mean_x2 - self.apply_operator(&self.mean_x1)
    }
}

fn row_means(x: &RealMatrix) -> RealVector {
    x.column_mean()
}

fn subtract_column(x: &RealMatrix, mu: &RealVector) -> RealMatrix {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= mu;
    }
    out
}

pub fn centered_dmd(pair: &SnapshotPair, rank: Option<usize>) -> Result<CenteredDmdModel> {
    centered_dmd_with(pair, &DmdOptions::with_rank(rank))
}

pub fn centered_dmd_with(pair: &SnapshotPair, opts: &DmdOptions) -> Result<CenteredDmdModel> {
    if pair.t() < 2 {
        return invalid("centering needs at least two snapshot pairs");
    }
    let mu1 = row_means(pair.x1());
    let mu2 = row_means(pair.x2());
    let c1 = subtract_column(pair.x1(), &mu1);
    let c2 = subtract_column(pair.x2(), &mu2);
    let n = pair.n();

    if c1.iter().all(|&v| v == 0.0) {
        // Constant snapshots: Abar = 0, so the bias is mu2 and it is also the fixed point.
        let base = DmdModel {
            eigenvalues: Vec::new(),
            modes: DMatrix::zeros(n, 0),
            amplitudes: Vec::new(),
            method: Method::Centered,
            rank_used: 0,
            operator: super::ReducedOperator { lifted: DMatrix::zeros(n, 0), basis: DMatrix::zeros(n, 0) },
        };
        return Ok(CenteredDmdModel { base, bias: mu2.clone(), fixed_point: Some(mu2.clone()), mean_x1: mu1, mean_x2: mu2 });
    }

    let (base, f) = fit_reduced(&c1, &c2, opts, Method::Centered)?;
    let bias = &mu2 - &f.lifted * (f.basis.tr_mul(&mu1));

    let has_unit = base.eigenvalues.iter().any(|z| (z - 1.0).norm() < opts.unit_tol);
    let fixed_point = if has_unit {
        None
    } else {
        // (I - L B^T)^-1 = I + L (I - B^T L)^-1 B^T
        let r = f.reduced.nrows();
        let small = DMatrix::<f64>::identity(r, r) - &f.reduced;
        let rhs = f.basis.tr_mul(&bias);
        small.lu().solve(&rhs).map(|y| &bias + &f.lifted * y)
    };

    Ok(CenteredDmdModel { base, bias, fixed_point, mean_x1: mu1, mean_x2: mu2 })
}

/// Minimum-norm `A` (with `b` unpenalized) minimizing `||A X1 + b 1^T - X2||_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub a: RealMatrix,
    pub b: RealVector,
}

/// Solves the affine least-squares problem on the augmented matrix `[X1^T 1]`
/// directly, without any centering.
pub fn affine_dmd_direct(pair: &SnapshotPair) -> Result<AffineFit> {
    if pair.t() < 2 {
        return invalid("the affine fit needs at least two snapshot pairs");
    }
    let (n, t) = (pair.n(), pair.t());
    let mut m = RealMatrix::zeros(t, n + 1);
    m.view_mut((0, 0), (t, n)).copy_from(&pair.x1().transpose());
    m.column_mut(n).fill(1.0);

    let dec = linalg::svd(&m)?;
    let k = dec.count_above(linalg::EXACT_REL_TOL);
    let vk = dec.vt.rows(0, k).transpose();
    let m_pinv = linalg::pinv(&m, linalg::EXACT_REL_TOL)?;
    // Every least-squares solution is S + N Z with N the projector onto null(M).
    let s = &m_pinv * pair.x2().transpose();
    let null_proj = RealMatrix::identity(n + 1, n + 1) - &vk * vk.transpose();

    // Among those, pick Z to minimize the norm of the A-block P_a (S + N Z).
    let g = null_proj.rows(0, n).into_owned();
    let pa_s = s.rows(0, n).into_owned();
    let g_pinv = pinv_abs(&g, 1e-10)?;
    let z = -(&g_pinv * &pa_s);
    let full = &s + &null_proj * z;

    Ok(AffineFit { a: full.rows(0, n).transpose(), b: full.row(n).transpose() })
}

/// Pseudoinverse cutting singular values at an absolute level; `g` has
/// singular values in `[0, 1]` so a relative cutoff would amplify rounding.
fn pinv_abs(g: &RealMatrix, abs_tol: f64) -> Result<RealMatrix> {
    let dec = linalg::svd(g)?;
    let keep = dec.s.iter().filter(|&&s| s > abs_tol).count();
    let mut out = RealMatrix::zeros(g.ncols(), g.nrows());
    for j in 0..keep {
        let v: DVector<f64> = dec.vt.row(j).transpose();
        out += (v / dec.s[j]) * dec.u.column(j).transpose();
    }
    Ok(out)
}
