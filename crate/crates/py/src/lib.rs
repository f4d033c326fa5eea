//! Python bindings: the grid/field types, the semigroup and window
//! operations, the continuation solver, and the explicit oracle.
//!
//! Fields cross the boundary as flat `list[float]` in row-major
//! `(i, j, k)` order; `Field.shape` gives the cube side.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use semiheat::continuation::{self, RunStatus, SolveParams};
use semiheat::diagnostics;
use semiheat::error::Error;
use semiheat::fd;
use semiheat::grid::{GridSpec, RealField};
use semiheat::picard;
use semiheat::semigroup;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Uniform periodic cube: `n` points per axis, edge length `l`.
#[pyclass(module = "semiheat_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Grid {
    inner: GridSpec,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(n: usize, l: f64) -> PyResult<Self> {
        Ok(Self {
            inner: GridSpec::new(n, l).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.points_per_axis()
    }

    #[getter]
    fn l(&self) -> f64 {
        self.inner.box_length()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, l={})", self.n(), self.l())
    }
}

/// Real-valued sample field on a [`Grid`].
#[pyclass(module = "semiheat_py", skip_from_py_object)]
#[derive(Clone)]
struct Field {
    inner: RealField,
}

#[pymethods]
impl Field {
    /// Build from a flat row-major list of `n^3` samples.
    #[staticmethod]
    fn from_values(grid: &Grid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: RealField::from_values(grid.inner, values).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn zeros(grid: &Grid) -> Self {
        Self {
            inner: RealField::zeros(grid.inner),
        }
    }

    #[staticmethod]
    fn constant(grid: &Grid, c: f64) -> PyResult<Self> {
        Ok(Self {
            inner: RealField::constant(grid.inner, c).map_err(to_py_err)?,
        })
    }

    /// Centered Gaussian bump `amplitude * exp(-r^2 / (2 width^2))`.
    #[staticmethod]
    fn gaussian_bump(grid: &Grid, amplitude: f64, width: f64) -> PyResult<Self> {
        let c = grid.inner.box_length() / 2.0;
        let inner = RealField::from_fn(grid.inner, |x, y, z| {
            let r2 = (x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2);
            amplitude * (-r2 / (2.0 * width * width)).exp()
        })
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Single sine mode along one axis.
    #[staticmethod]
    fn sine(grid: &Grid, axis: usize, mode: usize, amplitude: f64) -> PyResult<Self> {
        if axis > 2 {
            return Err(PyValueError::new_err("axis must be 0, 1, or 2"));
        }
        let l = grid.inner.box_length();
        let inner = RealField::from_fn(grid.inner, |x, y, z| {
            let coord = [x, y, z][axis];
            amplitude * (2.0 * std::f64::consts::PI * mode as f64 * coord / l).sin()
        })
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Load from the binary snapshot format.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self {
            inner: RealField::read_snapshot(&mut file).map_err(to_py_err)?,
        })
    }

    /// Write the binary snapshot format.
    fn save(&self, path: &str) -> PyResult<()> {
        let mut file =
            std::fs::File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        self.inner.write_snapshot(&mut file).map_err(to_py_err)
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid {
            inner: self.inner.grid(),
        }
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        let n = self.inner.grid().points_per_axis();
        (n, n, n)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.inner.at(i, j, k)
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn sup_distance(&self, other: &Field) -> PyResult<f64> {
        self.inner.sup_distance(&other.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Field(n={}, l={}, sup={})",
            self.inner.grid().points_per_axis(),
            self.inner.grid().box_length(),
            self.inner.sup_norm()
        )
    }
}

/// Propagate a field by time `t` under the heat flow (spectral, exact).
#[pyfunction]
fn apply_semigroup(f: &Field, t: f64) -> PyResult<Field> {
    Ok(Field {
        inner: semigroup::apply_semigroup(&f.inner, t).map_err(to_py_err)?,
    })
}

/// Real-space periodized Gaussian convolution (the independent oracle).
#[pyfunction]
fn gaussian_convolve_direct(f: &Field, t: f64) -> PyResult<Field> {
    Ok(Field {
        inner: semigroup::gaussian_convolve_direct(&f.inner, t).map_err(to_py_err)?,
    })
}

/// Grid integral of the periodized heat kernel (must be 1 to 1e-10).
#[pyfunction]
fn kernel_mass(grid: &Grid, t: f64) -> PyResult<f64> {
    semigroup::kernel_mass(&grid.inner, t).map_err(to_py_err)
}

/// Pointwise `|f|^rho * f`.
#[pyfunction]
fn nonlinearity(f: &Field, rho: f64) -> PyResult<Field> {
    Ok(Field {
        inner: picard::nonlinearity(&f.inner, rho).map_err(to_py_err)?,
    })
}

/// `(N_u, N_grad, L_rho2, sup)` of one field.
#[pyfunction]
fn energy_functionals(f: &Field, rho: f64) -> (f64, f64, f64, f64) {
    let e = diagnostics::energy_functionals(&f.inner, rho);
    (e.n_u, e.n_grad, e.l_rho2, e.sup)
}

/// Schedule one contraction window; returns `(radius, window)`.
#[pyfunction]
#[pyo3(signature = (f_bound, rho, q=0.5, t_cap=f64::INFINITY, m=8))]
fn plan_window(f_bound: f64, rho: f64, q: f64, t_cap: f64, m: usize) -> PyResult<(f64, f64)> {
    let plan = continuation::plan_window(f_bound, rho, q, t_cap, m).map_err(to_py_err)?;
    Ok((plan.radius, plan.window))
}

/// Exact solution of the space-free reduction `u' = -|u|^rho u`.
#[pyfunction]
fn homogeneous_exact(u0: f64, rho: f64, t: f64) -> f64 {
    fd::homogeneous_exact(u0, rho, t)
}

/// Explicit stencil integration to `t_max` (the cross-check oracle).
#[pyfunction]
#[pyo3(signature = (u0, t_max, rho, dt=None))]
fn fd_solve(u0: &Field, t_max: f64, rho: f64, dt: Option<f64>) -> PyResult<Field> {
    let grid = u0.inner.grid();
    let dt = dt.unwrap_or_else(|| 0.5 * fd::stability_bound(&grid));
    let cfg = fd::FdConfig::new(grid, dt, t_max).map_err(to_py_err)?;
    Ok(Field {
        inner: fd::fd_solve(&u0.inner, t_max, &cfg, rho).map_err(to_py_err)?,
    })
}

/// Run the windowed continuation solver.
///
/// Returns a dict with `status`, `final_time`, `final` (a [`Field`]),
/// the per-node series `t`, `n_u`, `n_grad`, `l_rho2`, `sup`, and a
/// `windows` list of per-window dicts.
#[pyfunction]
#[pyo3(signature = (u0, rho, t_max, *, q=0.5, tol=1e-10, m=8, max_iter=400,
                    t_cap=f64::INFINITY, blowup_factor=1e12, t_min=1e-12,
                    nonlinear=true))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    u0: &Field,
    rho: f64,
    t_max: f64,
    q: f64,
    tol: f64,
    m: usize,
    max_iter: usize,
    t_cap: f64,
    blowup_factor: f64,
    t_min: f64,
    nonlinear: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let params = SolveParams {
        rho,
        t_max,
        q,
        tol,
        intervals: m,
        max_iter,
        t_cap,
        blowup_factor,
        t_min,
        nonlinear,
    };
    let outcome = continuation::global_solve(&u0.inner, &params).map_err(to_py_err)?;

    let out = PyDict::new(py);
    let status = match &outcome.run.status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::BlowupSuspected(diag) => {
            out.set_item("diagnosis", diag.to_string())?;
            "blowup_suspected".to_string()
        }
        RunStatus::Nonconvergence { t0, .. } => {
            out.set_item("diagnosis", format!("window at t0 = {t0} did not converge"))?;
            "nonconvergence".to_string()
        }
    };
    out.set_item("status", status)?;
    out.set_item("final_time", outcome.run.final_time)?;
    out.set_item(
        "final",
        Field {
            inner: outcome.final_field.clone(),
        }
        .into_pyobject(py)?,
    )?;
    let nodes = &outcome.report.nodes;
    out.set_item("t", nodes.iter().map(|n| n.t).collect::<Vec<_>>())?;
    out.set_item("n_u", nodes.iter().map(|n| n.n_u).collect::<Vec<_>>())?;
    out.set_item("n_grad", nodes.iter().map(|n| n.n_grad).collect::<Vec<_>>())?;
    out.set_item("l_rho2", nodes.iter().map(|n| n.l_rho2).collect::<Vec<_>>())?;
    out.set_item("sup", nodes.iter().map(|n| n.sup).collect::<Vec<_>>())?;

    let windows = pyo3::types::PyList::empty(py);
    for (record, diag) in outcome.run.windows.iter().zip(&outcome.report.windows) {
        let w = PyDict::new(py);
        w.set_item("t0", record.t0)?;
        w.set_item("window", record.plan.window)?;
        w.set_item("radius", record.plan.radius)?;
        w.set_item("q_target", record.plan.q)?;
        w.set_item("iterations", record.report.iterations)?;
        w.set_item("measured_q", record.report.measured_q)?;
        w.set_item("converged", record.report.converged)?;
        w.set_item("balance_residual", diag.balance_residual)?;
        w.set_item("holder_lhs", diag.holder.lhs)?;
        w.set_item("holder_factor1", diag.holder.factor1)?;
        w.set_item("holder_factor2", diag.holder.factor2.to_string())?;
        windows.append(w)?;
    }
    out.set_item("windows", windows)?;
    Ok(out)
}

#[pymodule]
fn semiheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Field>()?;
    m.add_function(wrap_pyfunction!(apply_semigroup, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_convolve_direct, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_mass, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinearity, m)?)?;
    m.add_function(wrap_pyfunction!(energy_functionals, m)?)?;
    m.add_function(wrap_pyfunction!(plan_window, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_exact, m)?)?;
    m.add_function(wrap_pyfunction!(fd_solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
