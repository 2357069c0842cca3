//! Forecasting from the first snapshot.

use super::{fit_on_modes, CenteredDmdModel, DmdModel};
use crate::error::{invalid, Result};
use crate::{Complex64, ComplexMatrix, ComplexVector, RealMatrix, RealVector};

fn check_steps(steps: usize, x1_len: usize, n: usize) -> Result<()> {
    if steps == 0 {
        return invalid("steps must be at least 1");
    }
    if x1_len != n {
        return invalid(format!("initial state has length {x1_len}, model dimension is {n}"));
    }
    Ok(())
}

/// Column `k` is `sum_i a_i lambda_i^k phi_i`.
fn evolve(modes: &ComplexMatrix, eigenvalues: &[Complex64], amplitudes: &[Complex64], steps: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(modes.nrows(), steps);
    let mut coeff: Vec<Complex64> = amplitudes.to_vec();
    for k in 0..steps {
        let mut col = out.column_mut(k);
        for (i, a) in coeff.iter().enumerate() {
            if *a != Complex64::new(0.0, 0.0) {
                col.axpy(*a, &modes.column(i), Complex64::new(1.0, 0.0));
            }
        }
        for (a, lam) in coeff.iter_mut().zip(eigenvalues) {
            *a *= lam;
        }
    }
    out
}

fn complexify(v: &RealVector) -> ComplexVector {
    v.map(|x| Complex64::new(x, 0.0))
}

impl DmdModel {
    pub fn reconstruct_complex(&self, x1: &ComplexVector, steps: usize) -> Result<ComplexMatrix> {
        check_steps(steps, x1.len(), self.state_dim())?;
        let a = fit_on_modes(&self.modes, x1)?;
        Ok(evolve(&self.modes, &self.eigenvalues, &a, steps))
    }

    /// Real part of the modal forecast started at `x1`; column 0 is the fit of `x1` itself.
    pub fn reconstruct(&self, x1: &RealVector, steps: usize) -> Result<RealMatrix> {
        Ok(self.reconstruct_complex(&complexify(x1), steps)?.map(|z| z.re))
    }

    /// One application of the fitted propagator to each column of `x`.
    pub fn predict_step(&self, x: &RealMatrix) -> RealMatrix {
        self.propagate(x).map(|z| z.re)
    }

    /// Repeated application of the propagator: column 0 is `x1`, column `k` is `A^k x1`.
    pub fn iterate(&self, x1: &RealVector, steps: usize) -> Result<RealMatrix> {
        check_steps(steps, x1.len(), self.state_dim())?;
        let mut out = RealMatrix::zeros(x1.len(), steps);
        out.set_column(0, x1);
        for k in 1..steps {
            let next = self.predict_step(&out.columns(k - 1, 1).into_owned());
            out.set_column(k, &next.column(0));
        }
        Ok(out)
    }
}

impl CenteredDmdModel {
    pub fn reconstruct_complex(&self, x1: &ComplexVector, steps: usize) -> Result<ComplexMatrix> {
        let base = &self.base;
        check_steps(steps, x1.len(), base.state_dim())?;
        match &self.fixed_point {
            Some(c) => {
                let c = complexify(c);
                let a = fit_on_modes(&base.modes, &(x1 - &c))?;
                let mut out = evolve(&base.modes, &base.eigenvalues, &a, steps);
                for mut col in out.column_iter_mut() {
                    col += &c;
                }
                Ok(out)
            }
            None => {
                // Fluctuation about mu1 plus the mean carried forward by m <- Abar m + b.
                let mu = complexify(&self.mean_x1);
                let bias = complexify(&self.bias);
                let a = fit_on_modes(&base.modes, &(x1 - &mu))?;
                let mut out = evolve(&base.modes, &base.eigenvalues, &a, steps);
                let mut m = mu;
                for k in 0..steps {
                    let mut col = out.column_mut(k);
                    col += &m;
                    m = base.operator.apply(&m) + &bias;
                }
                Ok(out)
            }
        }
    }

    pub fn reconstruct(&self, x1: &RealVector, steps: usize) -> Result<RealMatrix> {
        Ok(self.reconstruct_complex(&complexify(x1), steps)?.map(|z| z.re))
    }

    /// `Abar x + bias` for each column of `x`.
    pub fn predict_step(&self, x: &RealMatrix) -> RealMatrix {
        let mut out = self.base.predict_step(x);
        for mut col in out.column_iter_mut() {
            col += &self.bias;
        }
        out
    }

    /// Repeated application of `x <- Abar x + bias` starting from `x1`.
    pub fn iterate(&self, x1: &RealVector, steps: usize) -> Result<RealMatrix> {
        check_steps(steps, x1.len(), self.base.state_dim())?;
        let mut out = RealMatrix::zeros(x1.len(), steps);
        out.set_column(0, x1);
        for k in 1..steps {
            let next = self.predict_step(&out.columns(k - 1, 1).into_owned());
            out.set_column(k, &next.column(0));
        }
        Ok(out)
    }

    /// Dense affine propagator `Abar`. Only sensible for modest state dimension.
    pub fn operator_matrix(&self) -> RealMatrix {
        self.base.operator_matrix().map(|z| z.re)
    }
}

/// Largest imaginary magnitude relative to the largest entry.
pub fn imaginary_residue(m: &ComplexMatrix) -> f64 {
    let peak = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / peak
}
