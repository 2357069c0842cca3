//! Dense linear-algebra substrate.
//!
//! Everything here is a pure function of its inputs. Matrices are plain
//! `nalgebra::DMatrix` values; the [`Scalar`] trait lets the same routines run
//! on real data and on complex data (needed once a known, non-real frequency is
//! projected out of a real trajectory). The decompositions themselves are
//! delegated to `faer`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, DmdError, Result};
use crate::{ComplexMatrix, RealMatrix};

/// Default relative cutoff used when "exact" rank is wanted.
pub const EXACT_REL_TOL: f64 = 1e-12;


/// Field of matrix entries accepted by the decomposition routines.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const IS_REAL: bool;

    fn to_c64(self) -> Complex64;

    /// Real scalars keep only the real part.
    fn from_c64(z: Complex64) -> Self;

    /// All eigenvalues of a square matrix. Real matrices go through the real
    /// Schur form so complex eigenvalues come out in exact conjugate pairs.
    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<Complex64>>;

    /// Raw thin SVD, unchecked.
    fn thin_svd(m: &DMatrix<Self>) -> Result<Factors<Self>>;
}

fn to_faer<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer<T: nalgebra::Scalar + Copy>(m: faer::MatRef<'_, T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn faer_thin_svd<T>(m: &DMatrix<T>, real_part: impl Fn(T) -> f64, conj: impl Fn(T) -> T) -> Result<Factors<T>>
where
    T: faer::traits::ComplexField + nalgebra::Scalar + Copy,
{
    let dec = to_faer(m).thin_svd().map_err(|_| DmdError::NoConvergence("singular value decomposition"))?;
    let s = dec.S().column_vector().iter().map(|&v| real_part(v)).collect();
    let v = dec.V();
    let vt = DMatrix::from_fn(v.ncols(), v.nrows(), |i, j| conj(v[(j, i)]));
    Ok((from_faer(dec.U()), s, vt))
}

impl Scalar for f64 {
    const IS_REAL: bool = true;

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
        if m.nrows() == 0 {
            return Ok(Vec::new());
        }
        to_faer(m).eigenvalues().map_err(|_| DmdError::NoConvergence("real Schur decomposition"))
    }

    fn thin_svd(m: &DMatrix<f64>) -> Result<Factors<f64>> {
        faer_thin_svd(m, |v| v, |v| v)
    }
}

impl Scalar for Complex64 {
    const IS_REAL: bool = false;

    fn to_c64(self) -> Complex64 {
        self
    }

    fn from_c64(z: Complex64) -> Self {
        z
    }

    fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
        if m.nrows() == 0 {
            return Ok(Vec::new());
        }
        to_faer(m).eigenvalues().map_err(|_| DmdError::NoConvergence("complex Schur decomposition"))
    }

    fn thin_svd(m: &DMatrix<Complex64>) -> Result<Factors<Complex64>> {
        faer_thin_svd(m, |v| v.re, |v| v.conj())
    }
}

pub fn to_complex<T: Scalar>(m: &DMatrix<T>) -> ComplexMatrix {
    m.map(|x| x.to_c64())
}

pub(crate) fn ensure_finite<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid(format!("{what} contains non-finite entries"))
    }
}

/// Thin singular value decomposition `M = U diag(S) Vt` with `S` nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub vt: DMatrix<T>,
}

impl<T: Scalar> SvdResult<T> {
    /// Number of singular values strictly above `rel_tol * s_max`.
    pub fn count_above(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rel_tol * smax).count()
    }
}

pub fn svd<T: Scalar>(m: &DMatrix<T>) -> Result<SvdResult<T>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return invalid("svd of an empty matrix");
    }
    ensure_finite(m, "matrix")?;
    let (u, s, vt) = T::thin_svd(m)?;
    Ok(SvdResult { u, s, vt })
}

type Factors<T> = (DMatrix<T>, Vec<f64>, DMatrix<T>);

/// Moore-Penrose pseudoinverse; singular values at or below `rel_tol * s_max`
/// are treated as zero.
pub fn pinv<T: Scalar>(m: &DMatrix<T>, rel_tol: f64) -> Result<DMatrix<T>> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}"));
    }
    let dec = svd(m)?;
    Ok(pinv_from_svd(&dec, dec.count_above(rel_tol), m.nrows(), m.ncols()))
}

fn pinv_from_svd<T: Scalar>(dec: &SvdResult<T>, keep: usize, rows: usize, cols: usize) -> DMatrix<T> {
    if keep == 0 {
        return DMatrix::zeros(cols, rows);
    }
    // V_k diag(1/s) U_k^H
    let mut vs = dec.vt.rows(0, keep).adjoint();
    for (j, mut col) in vs.column_iter_mut().enumerate() {
        col.scale_mut(1.0 / dec.s[j]);
    }
    vs * dec.u.columns(0, keep).adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankMethod {
    /// Count singular values above `rel_tol * s_max`.
    ExactTol(f64),
    /// Cut at the largest ratio between consecutive singular values.
    RelativeGap,
    /// Aspect-ratio dependent hard threshold on the singular values.
    OptimalHardThreshold,
}

impl RankMethod {
    pub fn exact() -> Self {
        RankMethod::ExactTol(EXACT_REL_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEstimate {
    pub r: usize,
    pub method: RankMethod,
    pub threshold_used: f64,
}

/// Smallest ratio that counts as a gap for [`RankMethod::RelativeGap`];
/// below it the matrix is reported as numerically full rank.
const MIN_GAP_RATIO: f64 = 10.0;

/// Estimate the rank of the signal component of `m`.
///
/// `noise_hint` is the per-entry noise standard deviation, used only by the
/// hard-threshold method; without it the noise level is inferred from the
/// median singular value.
pub fn effective_rank<T: Scalar>(
    m: &DMatrix<T>,
    method: RankMethod,
    noise_hint: Option<f64>,
) -> Result<RankEstimate> {
    let dec = svd(m)?;
    let s = &dec.s;
    let smax = s[0];
    if smax == 0.0 {
        return Ok(RankEstimate { r: 0, method, threshold_used: 0.0 });
    }
    let (r, threshold_used) = match method {
        RankMethod::ExactTol(rel_tol) => {
            if !(rel_tol > 0.0 && rel_tol < 1.0) {
                return invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}"));
            }
            (dec.count_above(rel_tol), rel_tol * smax)
        }
        RankMethod::RelativeGap => {
            let floor = f64::EPSILON * (m.nrows().max(m.ncols()) as f64) * smax;
            let clamped: Vec<f64> = s.iter().map(|&v| v.max(floor)).collect();
            let mut best = (0usize, 1.0f64);
            for i in 0..clamped.len().saturating_sub(1) {
                let ratio = clamped[i] / clamped[i + 1];
                if ratio > best.1 {
                    best = (i + 1, ratio);
                }
            }
            if best.1 < MIN_GAP_RATIO {
                let full = s.iter().filter(|&&v| v > floor).count();
                (full, floor)
            } else {
                (best.0, clamped[best.0 - 1].sqrt() * clamped[best.0].sqrt())
            }
        }
        RankMethod::OptimalHardThreshold => {
            let (short, long) = {
                let (a, b) = (m.nrows(), m.ncols());
                (a.min(b) as f64, a.max(b) as f64)
            };
            let beta = short / long;
            let tau = match noise_hint {
                Some(sigma) => {
                    if !(sigma >= 0.0 && sigma.is_finite()) {
                        return invalid("noise_hint must be finite and nonnegative");
                    }
                    hard_threshold_lambda(beta) * long.sqrt() * sigma
                }
                None => hard_threshold_omega(beta) * median(s),
            };
            (s.iter().filter(|&&v| v > tau).count(), tau)
        }
    };
    Ok(RankEstimate { r, method, threshold_used })
}

/// Threshold coefficient for known noise level.
pub fn hard_threshold_lambda(beta: f64) -> f64 {
    let root = (beta * beta + 14.0 * beta + 1.0).sqrt();
    (2.0 * (beta + 1.0) + 8.0 * beta / (beta + 1.0 + root)).sqrt()
}

/// Cubic fit of the threshold coefficient relative to the median singular value.
pub fn hard_threshold_omega(beta: f64) -> f64 {
    0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43
}

fn median(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// `len x q` Vandermonde matrix with entry `(i, j) = lambdas[j]^i`.
pub fn vandermonde(lambdas: &[Complex64], len: usize) -> Result<ComplexMatrix> {
    if lambdas.is_empty() {
        return invalid("vandermonde needs at least one generator");
    }
    if len == 0 {
        return invalid("vandermonde length must be at least 1");
    }
    if lambdas.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return invalid("vandermonde generators must be finite");
    }
    let mut v = ComplexMatrix::zeros(len, lambdas.len());
    for (j, &lam) in lambdas.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for i in 0..len {
            v[(i, j)] = p;
            p *= lam;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateBranch {
    /// The ones vector lies in the row space of X1.
    OnesInRowSpace,
    /// The ones vector has a component outside the row space of X1.
    OnesOutsideRowSpace,
}

#[derive(Debug, Clone)]
pub struct CenteredPseudoinverse {
    pub pinv: RealMatrix,
    pub branch: UpdateBranch,
}

/// Pseudoinverse of the row-centered matrix `X1 - mu1 1^T`, obtained as a
/// rank-one update of `pinv(X1)` instead of a fresh decomposition.
pub fn centered_pinv_update(x1: &RealMatrix) -> Result<CenteredPseudoinverse> {
    let t = x1.ncols();
    if t < 2 {
        return invalid("centering needs at least two columns");
    }
    let x1_pinv = pinv(x1, EXACT_REL_TOL)?;
    let ones = DVector::<f64>::from_element(t, 1.0);
    // n = X1^+^T 1
    let n = x1_pinv.tr_mul(&ones);
    // m = (I - X1^+ X1)^T 1 = 1 - X1^T n
    let m = &ones - x1.tr_mul(&n);
    let zero_tol = 1e-8 * (t as f64).sqrt();

    if m.amax() < zero_tol {
        let nn = n.norm_squared();
        let pinv = if nn == 0.0 {
            x1_pinv
        } else {
            let xn = &x1_pinv * &n;
            &x1_pinv - (xn * n.transpose()) / nn
        };
        Ok(CenteredPseudoinverse { pinv, branch: UpdateBranch::OnesInRowSpace })
    } else {
        // 1^T (I - X1^+ X1) 1 = 1^T m
        let denom = m.sum();
        let pinv = &x1_pinv - (&m * n.transpose()) / denom;
        Ok(CenteredPseudoinverse { pinv, branch: UpdateBranch::OnesOutsideRowSpace })
    }
}

/// Tests `1^T X1^+ X = 1^T` in the infinity norm, which for well-posed linear
/// trajectories holds exactly when the propagator has eigenvalue one.
pub fn unit_eigenvalue_certificate(x1: &RealMatrix, x: &RealMatrix, tol: f64) -> Result<bool> {
    if x.ncols() != x1.ncols() + 1 {
        return invalid(format!(
            "X must have one more column than X1 ({} vs {})",
            x.ncols(),
            x1.ncols()
        ));
    }
    if x.nrows() != x1.nrows() {
        return invalid("X and X1 must have the same number of rows");
    }
    let scale = x.amax().max(1.0);
    if (x.columns(0, x1.ncols()) - x1).amax() > 1e-12 * scale {
        return invalid("leading columns of X must equal X1");
    }
    Ok(unit_certificate_residual(x1, x)? < tol)
}

/// `|| 1^T X1^+ X - 1^T ||_inf`.
pub fn unit_certificate_residual(x1: &RealMatrix, x: &RealMatrix) -> Result<f64> {
    let x1_pinv = pinv(x1, EXACT_REL_TOL)?;
    let n = x1_pinv.tr_mul(&DVector::from_element(x1.ncols(), 1.0));
    let row = x.tr_mul(&n);
    Ok(row.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
}

/// Eigenvalues and unit-norm eigenvectors of a square matrix.
///
/// Each eigenvector is the right singular vector of `M - lambda I` belonging
/// to its smallest singular value. For real input the vector of `conj(lambda)`
/// is taken as the conjugate of the vector of `lambda`.
pub fn eigen_decompose<T: Scalar>(m: &DMatrix<T>) -> Result<(Vec<Complex64>, ComplexMatrix)> {
    let r = m.nrows();
    if r != m.ncols() {
        return invalid("eigendecomposition needs a square matrix");
    }
    let values = T::eigenvalues(m)?;
    let mc = to_complex(m);
    let mut vectors = ComplexMatrix::zeros(r, r);
    for (k, &lam) in values.iter().enumerate() {
        if T::IS_REAL && lam.im < 0.0 {
            if let Some(p) = values[..k].iter().position(|&z| z == lam.conj()) {
                let partner = vectors.column(p).map(|z| z.conj());
                vectors.set_column(k, &partner);
                continue;
            }
        }
        let shifted = &mc - ComplexMatrix::identity(r, r) * lam;
        let dec = svd(&shifted)?;
        // Thin factors of a square matrix are square, so the last row is the null direction.
        let v = dec.vt.row(r - 1).adjoint();
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Unit 2-norm, with the first significant entry rotated onto the positive real axis.
pub fn canonicalize(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    v.unscale_mut(norm);
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-6 * peak).copied() {
        let phase = lead.conj() / lead.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// `X (I - X^+ X)` without forming the projector.
pub fn residual_after_projection<T: Scalar>(x2: &DMatrix<T>, x1: &DMatrix<T>) -> Result<DMatrix<T>> {
    let x1_pinv = pinv(x1, EXACT_REL_TOL)?;
    Ok(x2 - (x2 * &x1_pinv) * x1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pinv_identity_and_diagonal() {
        let i3 = RealMatrix::identity(3, 3);
        assert_relative_eq!(pinv(&i3, 1e-12).unwrap(), i3, epsilon = 1e-15);

        let d = dmatrix![2.0, 0.0; 0.0, 0.0];
        let p = pinv(&d, 1e-12).unwrap();
        assert_relative_eq!(p, dmatrix![0.5, 0.0; 0.0, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn pinv_rejects_bad_input() {
        let mut m = RealMatrix::identity(2, 2);
        assert!(pinv(&m, 0.0).is_err());
        assert!(pinv(&m, 1.0).is_err());
        m[(0, 1)] = f64::NAN;
        assert!(matches!(pinv(&m, 1e-12), Err(DmdError::InvalidInput(_))));
        assert!(pinv(&RealMatrix::zeros(0, 3), 1e-12).is_err());
    }

    #[test]
    fn pinv_of_zero_is_zero_transpose() {
        let z = RealMatrix::zeros(2, 3);
        assert_eq!(pinv(&z, 1e-12).unwrap(), RealMatrix::zeros(3, 2));
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        for method in [RankMethod::exact(), RankMethod::RelativeGap, RankMethod::OptimalHardThreshold] {
            let est = effective_rank(&RealMatrix::zeros(4, 5), method, None).unwrap();
            assert_eq!(est.r, 0);
        }
    }

    #[test]
    fn relative_gap_full_rank_identity() {
        let est = effective_rank(&RealMatrix::identity(4, 4), RankMethod::RelativeGap, None).unwrap();
        assert_eq!(est.r, 4);
    }

    #[test]
    fn vandermonde_powers() {
        let v = vandermonde(&[c(2.0, 0.0), c(3.0, 0.0)], 3).unwrap();
        let expected = [[1.0, 1.0], [2.0, 3.0], [4.0, 9.0]];
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(v[(i, j)], c(expected[i][j], 0.0));
            }
        }
        assert!(vandermonde(&[], 3).is_err());
        assert!(vandermonde(&[c(1.0, 0.0)], 0).is_err());
    }

    #[test]
    fn vandermonde_repeated_generator_is_rank_one() {
        let v = vandermonde(&[c(2.0, 0.0), c(2.0, 0.0)], 4).unwrap();
        assert_eq!(effective_rank(&v, RankMethod::exact(), None).unwrap().r, 1);
    }

    #[test]
    fn centered_update_constant_columns_gives_zero() {
        let x1 = RealMatrix::from_fn(3, 4, |i, _| (i + 1) as f64);
        let out = centered_pinv_update(&x1).unwrap();
        assert_eq!(out.branch, UpdateBranch::OnesInRowSpace);
        assert!(out.pinv.amax() < 1e-14);
    }

    #[test]
    fn centered_update_needs_two_columns() {
        let x1 = RealMatrix::from_element(3, 1, 1.0);
        assert!(matches!(centered_pinv_update(&x1), Err(DmdError::InvalidInput(_))));
    }

    #[test]
    fn certificate_column_mismatch() {
        let x = RealMatrix::from_element(2, 3, 1.0);
        let x1 = RealMatrix::from_element(2, 3, 1.0);
        assert!(unit_eigenvalue_certificate(&x1, &x, 1e-8).is_err());
    }

    #[test]
    fn certificate_constant_trajectory() {
        let x = RealMatrix::from_fn(2, 5, |i, _| [1.5, -0.5][i]);
        let x1 = x.columns(0, 4).into_owned();
        assert!(unit_eigenvalue_certificate(&x1, &x, 1e-8).unwrap());
    }

    #[test]
    fn eigen_decompose_rotation_pair() {
        let m = dmatrix![0.0, -1.0; 1.0, 0.0];
        let (vals, vecs) = eigen_decompose(&m).unwrap();
        assert_eq!(vals.len(), 2);
        for (k, &lam) in vals.iter().enumerate() {
            assert_relative_eq!(lam.norm(), 1.0, epsilon = 1e-12);
            let v = vecs.column(k).into_owned();
            let mv = to_complex(&m) * &v;
            assert!((mv - v * lam).norm() < 1e-12);
        }
        assert_eq!(vals[0], vals[1].conj());
    }

    #[test]
    fn canonical_scaling() {
        let mut v = DVector::from_vec(vec![c(0.0, 0.0), c(0.0, 2.0), c(1.0, 1.0)]);
        canonicalize(&mut v);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-14);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }
}
