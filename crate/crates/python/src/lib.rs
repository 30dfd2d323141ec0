use mbc::pipeline::jacobi_measure;
use mbc::{Backend, DegeneratePolicy, MomentSequence, ResponseMethod, ResponseVector, SolveOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

create_exception!(moment_bc, NumericalRejection, PyArithmeticError);

fn pipeline_err(e: mbc::PipelineError) -> PyErr {
    if e.is_numerical() {
        NumericalRejection::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn backend(name: &str) -> PyResult<Backend> {
    match name {
        "takagi" => Ok(Backend::Takagi),
        "eigen" => Ok(Backend::Eigen),
        other => Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
    }
}

fn options(backend_name: &str, tol_singular: f64, tol_residual: f64, strict: bool) -> PyResult<SolveOptions> {
    Ok(SolveOptions {
        backend: backend(backend_name)?,
        tol_singular,
        tol_residual,
        degenerate: if strict { DegeneratePolicy::Reject } else { DegeneratePolicy::Reduce },
        ..SolveOptions::default()
    })
}

/// Complex Jacobi coefficients `a0`, `a_1..a_{N-1}`, `b_1..b_N`.
#[pyclass(name = "JacobiSpec", module = "moment_bc")]
struct PyJacobiSpec {
    inner: mbc::JacobiSpec,
}

#[pymethods]
impl PyJacobiSpec {
    #[new]
    fn new(a0: Complex64, a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<Self> {
        let inner = mbc::JacobiSpec::new(a0, a, b).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Seeded random spec of size `n`.
    #[staticmethod]
    #[pyo3(signature = (seed, n, unit_a0 = false))]
    fn random(seed: u64, n: usize, unit_a0: bool) -> Self {
        let inner = mbc::testing::random_spec(&mut mbc::testing::rng(seed), n, unit_a0);
        Self { inner }
    }

    #[getter]
    fn a0(&self) -> Complex64 {
        self.inner.a0
    }

    #[getter]
    fn a(&self) -> Vec<Complex64> {
        self.inner.a.clone()
    }

    #[getter]
    fn b(&self) -> Vec<Complex64> {
        self.inner.b.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn prefix(&self, n: usize) -> PyResult<Self> {
        let inner = self.inner.prefix(n).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Dense `A^N` as nested lists.
    fn matrix(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let a = mbc::truncate(&self.inner, self.inner.len()).map_err(value_err)?;
        Ok(rows(a.entries()))
    }

    /// `r_0..r_{len-1}`; `method` is `timestep` or `kernel`.
    #[pyo3(signature = (length = None, method = "timestep"))]
    fn response(&self, length: Option<usize>, method: &str) -> PyResult<Vec<Complex64>> {
        let method = match method {
            "timestep" => ResponseMethod::Timestep,
            "kernel" => ResponseMethod::Kernel,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let len = length.unwrap_or(2 * self.inner.len() - 1);
        let r = mbc::response_vector(&self.inner, len, method).map_err(value_err)?;
        Ok(r.r)
    }

    #[pyo3(signature = (backend = "takagi"))]
    fn measure(&self, backend: &str) -> PyResult<PyMeasure> {
        let opts = options(backend, mbc::DEFAULT_SINGULAR_TOL, 1e-8, false)?;
        let (inner, _) = jacobi_measure(&self.inner, &opts).map_err(pipeline_err)?;
        Ok(PyMeasure { inner })
    }

    fn __repr__(&self) -> String {
        format!("JacobiSpec(N={}, a0={})", self.inner.len(), self.inner.a0)
    }
}

/// Finite complex measure `sum_j weights[j] * delta(support[j])`.
#[pyclass(name = "Measure", module = "moment_bc")]
struct PyMeasure {
    inner: mbc::DiscreteMeasure,
}

#[pymethods]
impl PyMeasure {
    #[new]
    fn new(support: Vec<Complex64>, weights: Vec<Complex64>) -> PyResult<Self> {
        if support.len() != weights.len() {
            return Err(PyValueError::new_err("support and weights differ in length"));
        }
        Ok(Self {
            inner: mbc::DiscreteMeasure { support, weights },
        })
    }

    #[getter]
    fn support(&self) -> Vec<Complex64> {
        self.inner.support.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<Complex64> {
        self.inner.weights.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn total_mass(&self) -> Complex64 {
        self.inner.total_mass()
    }

    fn moments(&self, count: usize) -> Vec<Complex64> {
        self.inner.moments(count)
    }

    /// `|s_k(measure) - s_k|` for every given moment.
    fn residuals(&self, s: Vec<Complex64>) -> Vec<f64> {
        mbc::verify_measure(&self.inner, &MomentSequence::new(s))
    }

    fn __repr__(&self) -> String {
        format!("Measure(len={})", self.inner.len())
    }
}

/// Outcome of the nested minor check.
#[pyclass(name = "Admissibility", module = "moment_bc", get_all)]
struct PyAdmissibility {
    admissible: bool,
    first_failure: Option<usize>,
    /// `(k, size, sigma_ratio)` per minor.
    checks: Vec<(usize, usize, f64)>,
}

/// Recovered coefficients.
#[pyclass(name = "Recovery", module = "moment_bc", get_all)]
struct PyRecovery {
    a0: Complex64,
    a_squared: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    b_last_free: bool,
    ill_conditioned: bool,
}

#[pymethods]
impl PyRecovery {
    fn to_spec(&self) -> PyResult<PyJacobiSpec> {
        PyJacobiSpec::new(self.a0, self.a.clone(), self.b.clone())
    }
}

fn rows(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[pyfunction]
fn moments_to_response(s: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let r = mbc::moments_to_response(&MomentSequence::new(s)).map_err(value_err)?;
    Ok(r.r)
}

#[pyfunction]
fn response_to_moments(r: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let s = mbc::response_to_moments(&ResponseVector::new(r)).map_err(value_err)?;
    Ok(s.s)
}

#[pyfunction]
#[pyo3(signature = (r, size = None, tol = mbc::DEFAULT_SINGULAR_TOL))]
fn check_admissibility(r: Vec<Complex64>, size: Option<usize>, tol: f64) -> PyResult<PyAdmissibility> {
    let size = size.unwrap_or(r.len().div_ceil(2));
    let verdict = mbc::check_admissibility(&ResponseVector::new(r), size, tol).map_err(value_err)?;
    Ok(PyAdmissibility {
        admissible: verdict.is_admissible(),
        first_failure: verdict.first_failure,
        checks: verdict.checks.iter().map(|c| (c.k, c.size, c.sigma_ratio)).collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (s, depth, tol = mbc::DEFAULT_SINGULAR_TOL))]
fn recover(s: Vec<Complex64>, depth: usize, tol: f64) -> PyResult<PyRecovery> {
    let opts = mbc::RecoveryOptions {
        tol,
        ..mbc::RecoveryOptions::default()
    };
    let rec = mbc::recover_coefficients(&MomentSequence::new(s), depth, &opts).map_err(pipeline_err)?;
    Ok(PyRecovery {
        a0: rec.a0,
        a_squared: rec.a_squared,
        a: rec.a_principal,
        b: rec.b,
        b_last_free: rec.b_last_free,
        ill_conditioned: !rec.warnings.is_empty(),
    })
}

/// Measure whose moments match `s_0..s_{2N-2}`.
#[pyfunction]
#[pyo3(signature = (s, backend = "takagi", strict = false, tol_singular = mbc::DEFAULT_SINGULAR_TOL, tol_residual = 1e-8))]
fn solve(s: Vec<Complex64>, backend: &str, strict: bool, tol_singular: f64, tol_residual: f64) -> PyResult<PyMeasure> {
    let opts = options(backend, tol_singular, tol_residual, strict)?;
    let rep = mbc::solve_truncated(&MomentSequence::new(s), &opts).map_err(pipeline_err)?;
    Ok(PyMeasure { inner: rep.measure })
}

/// Measures of the given truncations and the largest shared-moment drift.
#[pyfunction]
#[pyo3(signature = (spec, sizes, backend = "takagi"))]
fn convergence_scan(spec: &PyJacobiSpec, sizes: Vec<usize>, backend: &str) -> PyResult<(f64, Vec<PyMeasure>)> {
    let opts = options(backend, mbc::DEFAULT_SINGULAR_TOL, 1e-8, false)?;
    let rep = mbc::convergence_scan(&spec.inner, &sizes, &opts).map_err(pipeline_err)?;
    let measures = rep.entries.into_iter().map(|e| PyMeasure { inner: e.measure }).collect();
    Ok((rep.max_deviation, measures))
}

/// `(U, d)` with `A = U diag(d) U^T`.
#[pyfunction]
#[pyo3(signature = (matrix, tol = 1e-12))]
fn takagi(matrix: Vec<Vec<Complex64>>, tol: f64) -> PyResult<(Vec<Vec<Complex64>>, Vec<Complex64>)> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let a = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    let fac = mbc::takagi_factorize(&a, tol).map_err(value_err)?;
    Ok((rows(&fac.u), fac.d))
}

#[pyfunction]
fn chebyshev_like(omega: Complex64, t: i64) -> PyResult<Complex64> {
    if t < -1 {
        return Err(PyValueError::new_err("t must be >= -1"));
    }
    Ok(mbc::chebyshev_like(omega, t))
}

#[pymodule]
fn moment_bc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJacobiSpec>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyAdmissibility>()?;
    m.add_class::<PyRecovery>()?;
    m.add("NumericalRejection", m.py().get_type::<NumericalRejection>())?;
    m.add_function(wrap_pyfunction!(moments_to_response, m)?)?;
    m.add_function(wrap_pyfunction!(response_to_moments, m)?)?;
    m.add_function(wrap_pyfunction!(check_admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_scan, m)?)?;
    m.add_function(wrap_pyfunction!(takagi, m)?)?;
    m.add_function(wrap_pyfunction!(chebyshev_like, m)?)?;
    Ok(())
}
