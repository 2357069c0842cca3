//! Python bindings for `centered-dmd`.
//!
//! Matrices cross the boundary as lists of rows, eigenvalues as Python
//! `complex`. Library errors map to `ValueError`, `RuntimeError` or `OSError`.

use std::collections::BTreeMap;

use centered_dmd::analysis::{optimal_matching as match_lists, spectral_distance as distance};
use centered_dmd::dmd::{self, DmdOptions};
use centered_dmd::experiment::{self, Experiment, ExperimentConfig};
use centered_dmd::synth::{self, LinearSystemSpec, NoiseSpec, Placement};
use centered_dmd::{Complex64, ComplexMatrix, DmdError, RealMatrix, RealVector};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: DmdError) -> PyErr {
    match e {
        DmdError::NoConvergence(_) | DmdError::IntegrationOverflow { .. } => PyRuntimeError::new_err(e.to_string()),
        DmdError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<RealMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(PyValueError::new_err("data must be a non-empty list of rows"));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("all rows must have the same length"));
    }
    Ok(RealMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn real_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn options(rank: Option<usize>, tol: Option<f64>) -> DmdOptions {
    let mut opts = DmdOptions::with_rank(rank);
    if let Some(tol) = tol {
        opts.rank_tol = tol;
    }
    opts
}

/// Fitted DMD model. Centered and frequency-subtracted fits fill the
/// optional attributes.
#[pyclass(frozen, module = "pycdmd")]
struct DmdModel {
    inner: dmd::DmdModel,
    centered: Option<dmd::CenteredDmdModel>,
    frequency: Option<dmd::FrequencyModel>,
}

#[pymethods]
impl DmdModel {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn rank_used(&self) -> usize {
        self.inner.rank_used
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<Complex64> {
        self.inner.eigenvalues.clone()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes.clone()
    }

    /// Modes as an `n x k` list of rows.
    #[getter]
    fn modes(&self) -> Vec<Vec<Complex64>> {
        complex_rows(&self.inner.modes)
    }

    #[getter]
    fn bias(&self) -> Option<Vec<f64>> {
        self.centered.as_ref().map(|c| c.bias.as_slice().to_vec())
    }

    #[getter]
    fn fixed_point(&self) -> Option<Vec<f64>> {
        self.centered.as_ref().and_then(|c| c.fixed_point.as_ref()).map(|v| v.as_slice().to_vec())
    }

    #[getter]
    fn fixed_lambdas(&self) -> Option<Vec<Complex64>> {
        self.frequency.as_ref().map(|f| f.fixed_lambdas.clone())
    }

    #[getter]
    fn forcing(&self) -> Option<Vec<Vec<Complex64>>> {
        self.frequency.as_ref().map(|f| complex_rows(&f.forcing))
    }

    /// Trajectory of `steps` states starting from `x1`, as rows of states.
    fn reconstruct(&self, x1: Vec<f64>, steps: usize) -> PyResult<Vec<Vec<f64>>> {
        let x1 = RealVector::from_vec(x1);
        let m = match &self.centered {
            Some(c) => c.reconstruct(&x1, steps),
            None => self.inner.reconstruct(&x1, steps),
        }
        .map_err(py_err)?;
        Ok(real_rows(&m))
    }

    fn __repr__(&self) -> String {
        format!("DmdModel(method='{}', rank_used={})", self.method(), self.inner.rank_used)
    }
}

/// Exact DMD of `data` (rows are state components, columns are snapshots).
#[pyfunction]
#[pyo3(signature = (data, rank=None, tol=None))]
fn exact_dmd(data: Vec<Vec<f64>>, rank: Option<usize>, tol: Option<f64>) -> PyResult<DmdModel> {
    let pair = dmd::split_snapshots(&to_matrix(&data)?).map_err(py_err)?;
    let inner = dmd::exact_dmd_with(&pair, &options(rank, tol)).map_err(py_err)?;
    Ok(DmdModel { inner, centered: None, frequency: None })
}

/// DMD of mean-subtracted snapshots, with bias and fixed point.
#[pyfunction(name = "centered_dmd")]
#[pyo3(signature = (data, rank=None, tol=None))]
fn centered(data: Vec<Vec<f64>>, rank: Option<usize>, tol: Option<f64>) -> PyResult<DmdModel> {
    let pair = dmd::split_snapshots(&to_matrix(&data)?).map_err(py_err)?;
    let model = dmd::centered_dmd_with(&pair, &options(rank, tol)).map_err(py_err)?;
    Ok(DmdModel { inner: model.base.clone(), centered: Some(model), frequency: None })
}

/// DMD after projecting the given eigenvalues out of the snapshots.
#[pyfunction]
#[pyo3(signature = (data, lambdas, rank=None, tol=None))]
fn frequency_subtracted_dmd(
    data: Vec<Vec<f64>>,
    lambdas: Vec<Complex64>,
    rank: Option<usize>,
    tol: Option<f64>,
) -> PyResult<DmdModel> {
    let pair = dmd::split_snapshots(&to_matrix(&data)?).map_err(py_err)?;
    let model = dmd::frequency_subtracted_dmd_with(&pair, &lambdas, &options(rank, tol)).map_err(py_err)?;
    Ok(DmdModel { inner: model.base.clone(), centered: None, frequency: Some(model) })
}

/// Companion-matrix DMD; returns `(coefficients, eigenvalues, residual_norm)`.
#[pyfunction]
fn companion_dmd(data: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<Complex64>, f64)> {
    let m = dmd::companion_dmd(&to_matrix(&data)?).map_err(py_err)?;
    Ok((m.coefficients.as_slice().to_vec(), m.eigenvalues, m.residual_norm))
}

/// Minimum-norm least-squares affine fit; returns `(A, b)`.
#[pyfunction]
fn affine_dmd_direct(data: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let pair = dmd::split_snapshots(&to_matrix(&data)?).map_err(py_err)?;
    let fit = dmd::affine_dmd_direct(&pair).map_err(py_err)?;
    Ok((real_rows(&fit.a), fit.b.as_slice().to_vec()))
}

/// Random linear or affine system with a known spectrum.
#[pyclass(frozen, module = "pycdmd")]
struct LinearSystem {
    spec: LinearSystemSpec,
}

#[pymethods]
impl LinearSystem {
    #[new]
    #[pyo3(signature = (n, r, placement="unit_annulus", seed=0, affine=false))]
    fn new(n: usize, r: usize, placement: &str, seed: u64, affine: bool) -> PyResult<Self> {
        let placement = match placement {
            "unit_annulus" => Placement::UnitAnnulus,
            "unit_annulus_with_unit" => Placement::UnitAnnulusWithUnit,
            "mixed_stable_unstable" => Placement::MixedStableUnstable,
            other => return Err(PyValueError::new_err(format!("unknown placement `{other}`"))),
        };
        let spec = synth::random_linear_system(n, r, placement, seed).map_err(py_err)?;
        let spec = if affine { spec.with_random_bias(synth::derive_seed(seed, 1, 0)).map_err(py_err)? } else { spec };
        Ok(Self { spec })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<Complex64> {
        self.spec.eigenvalues.clone()
    }

    #[getter]
    fn bias(&self) -> Option<Vec<f64>> {
        self.spec.bias.as_ref().map(|b| b.as_slice().to_vec())
    }

    fn operator(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(real_rows(&self.spec.operator().map_err(py_err)?))
    }

    /// `t + 1` snapshots as an `n x (t + 1)` list of rows, optionally noisy.
    #[pyo3(signature = (t, seed=0, eta=0.0))]
    fn simulate(&self, t: usize, seed: u64, eta: f64) -> PyResult<Vec<Vec<f64>>> {
        let x1 = synth::initial_state(&self.spec, seed).map_err(py_err)?;
        let x = synth::simulate(&self.spec, &x1, t, None).map_err(py_err)?;
        let x = synth::add_noise(&x, &NoiseSpec::gaussian(eta, synth::derive_seed(seed, 2, 0))).map_err(py_err)?;
        Ok(real_rows(&x))
    }
}

/// Sum of distances from each estimate to its nearest true eigenvalue.
#[pyfunction]
#[pyo3(signature = (estimated, truth, exclude_near_unity=false))]
fn spectral_distance(estimated: Vec<Complex64>, truth: Vec<Complex64>, exclude_near_unity: bool) -> PyResult<f64> {
    Ok(distance(&estimated, &truth, exclude_near_unity).map_err(py_err)?.matched_distance)
}

/// Optimal one-to-one matching; returns `(pairs, total_distance)`.
#[pyfunction]
fn optimal_matching(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<(Vec<usize>, f64)> {
    let m = match_lists(&a, &b).map_err(py_err)?;
    Ok((m.pairs, m.total))
}

/// Names accepted by `run_experiment`.
#[pyfunction]
fn experiments() -> Vec<&'static str> {
    Experiment::ALL.iter().map(|e| e.name()).collect()
}

/// Run a named experiment, writing its files to `output_dir`; returns the
/// summary as a dict.
#[pyfunction]
#[pyo3(signature = (name, output_dir, seed=0, overrides=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    name: &str,
    output_dir: &str,
    seed: u64,
    overrides: Option<BTreeMap<String, Bound<'py, PyAny>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = ExperimentConfig::new(name.parse::<Experiment>().map_err(py_err)?, seed, output_dir);
    for (k, v) in overrides.unwrap_or_default() {
        cfg = cfg.with_override(&k, v.str()?.to_string());
    }
    let summary = experiment::run_experiment(&cfg).map_err(py_err)?;
    let text = serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule]
fn pycdmd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", centered_dmd::VERSION)?;
    m.add_class::<DmdModel>()?;
    m.add_class::<LinearSystem>()?;
    m.add_function(wrap_pyfunction!(exact_dmd, m)?)?;
    m.add_function(wrap_pyfunction!(centered, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_subtracted_dmd, m)?)?;
    m.add_function(wrap_pyfunction!(companion_dmd, m)?)?;
    m.add_function(wrap_pyfunction!(affine_dmd_direct, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_distance, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_matching, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
