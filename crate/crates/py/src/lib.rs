//! Python bindings: exponents, functions, modulars, norms, distances and the
//! closedness reports, mirroring the CLI surface.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use varlex::modular::ModularResult;
use varlex::runner::{ExperimentConfig, ReportBundle};
use varlex::{analysis, modular as modular_mod, norms, parse, Exponent, Func, QuadConfig};

fn err(e: varlex::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cfg_from_kwargs(
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    force_quadrature: Option<bool>,
) -> QuadConfig {
    let mut cfg = QuadConfig::default();
    if let Some(v) = abs_tol {
        cfg.abs_tol = v;
    }
    if let Some(v) = rel_tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = force_quadrature {
        cfg.force_quadrature = v;
    }
    cfg
}

/// An exponent function p(.) on [0,1].
#[pyclass(name = "Exponent", frozen)]
#[derive(Clone)]
struct PyExponent {
    inner: Exponent,
}

#[pymethods]
impl PyExponent {
    /// Parse a spec string: constant(p), piecewise(breaks;values), log,
    /// spiked(J,s,b), shuffle(<spec>, seed[, depth]).
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        Ok(PyExponent {
            inner: parse::parse_exponent(spec).map_err(err)?,
        })
    }

    #[staticmethod]
    fn constant(p0: f64) -> PyResult<Self> {
        Ok(PyExponent {
            inner: Exponent::constant(p0).map_err(err)?,
        })
    }

    #[staticmethod]
    fn log_family() -> Self {
        PyExponent {
            inner: Exponent::log_family(),
        }
    }

    #[staticmethod]
    fn spiked(levels: u32, slope: f64, base: f64) -> PyResult<Self> {
        Ok(PyExponent {
            inner: Exponent::spiked(levels, slope, base).map_err(err)?,
        })
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(err)
    }

    fn dual(&self) -> Self {
        PyExponent {
            inner: self.inner.dual(),
        }
    }

    /// Sublevel set {p <= n} as a list of (lo, hi) intervals.
    fn level_set(&self, n: u32) -> PyResult<Vec<(f64, f64)>> {
        let set = self.inner.level_set(n).map_err(err)?;
        Ok(set.intervals().iter().map(|iv| (iv.lo, iv.hi)).collect())
    }

    fn decreasing_rearrangement(&self) -> PyResult<Self> {
        Ok(PyExponent {
            inner: self.inner.decreasing_rearrangement().map_err(err)?,
        })
    }

    /// measure{p > y}.
    fn distribution_above(&self, y: f64) -> PyResult<f64> {
        self.inner.distribution_above(y).map_err(err)
    }

    /// Tail-ratio criterion; returns {"ratios", "tail_ratio", "verdict"}.
    fn kozv_criterion<'py>(&self, py: Python<'py>, grid_depth: u32) -> PyResult<Bound<'py, PyDict>> {
        let rep = self.inner.kozv_criterion(grid_depth).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("ratios", rep.ratios)?;
        d.set_item("tail_ratio", rep.tail_ratio)?;
        d.set_item("verdict", rep.verdict)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Exponent({:?})", self.inner)
    }
}

/// A finitely-described function on [0,1].
#[pyclass(name = "Func", frozen)]
#[derive(Clone)]
struct PyFunc {
    inner: Func,
}

#[pymethods]
impl PyFunc {
    /// Parse a spec string: indicator(a,b), poly(breaks;rows), const(c),
    /// mask(<f>, omega(n)), sum(<f>; ...), scale(alpha, <f>). Masks resolve
    /// against the given exponent.
    #[staticmethod]
    #[pyo3(signature = (spec, exponent=None))]
    fn parse(spec: &str, exponent: Option<&PyExponent>) -> PyResult<Self> {
        let p = exponent
            .map(|e| e.inner.clone())
            .unwrap_or_else(Exponent::log_family);
        Ok(PyFunc {
            inner: parse::parse_func(spec, &p).map_err(err)?,
        })
    }

    #[staticmethod]
    fn constant(c: f64) -> Self {
        PyFunc {
            inner: Func::constant(c),
        }
    }

    #[staticmethod]
    fn indicator(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(PyFunc {
            inner: Func::indicator(lo, hi).map_err(err)?,
        })
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(err)
    }

    /// (max |f|, leftmost argmax).
    fn sup_norm(&self) -> PyResult<(f64, f64)> {
        let s = self.inner.sup_norm_argmax().map_err(err)?;
        Ok((s.value, s.argmax))
    }

    fn scaled(&self, factor: f64) -> Self {
        PyFunc {
            inner: Func::scaled(factor, self.inner.clone()),
        }
    }

    /// f * chi_{Omega_n} under the given exponent.
    fn truncate_to_level(&self, exponent: &PyExponent, n: u32) -> PyResult<Self> {
        Ok(PyFunc {
            inner: varlex::truncate_to_level(&self.inner, &exponent.inner, n).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Func({:?})", self.inner)
    }
}

/// rho_p(f/lambda): {"status", "value", "error_bound", "witness"}.
#[pyfunction]
#[pyo3(signature = (f, p, lam=1.0, abs_tol=None, rel_tol=None, force_quadrature=None))]
fn modular<'py>(
    py: Python<'py>,
    f: &PyFunc,
    p: &PyExponent,
    lam: f64,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    force_quadrature: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = cfg_from_kwargs(abs_tol, rel_tol, force_quadrature);
    let r = modular_mod::modular_scaled(&f.inner, &p.inner, lam, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    match r {
        ModularResult::Finite {
            value,
            error_bound,
            quadrature_used,
        } => {
            d.set_item("status", "finite")?;
            d.set_item("value", value)?;
            d.set_item("error_bound", error_bound)?;
            d.set_item("quadrature_used", quadrature_used)?;
        }
        ModularResult::Divergent { witness } => {
            d.set_item("status", "divergent")?;
            d.set_item("witness_region", witness.region)?;
            d.set_item("witness_reason", witness.reason)?;
        }
    }
    Ok(d)
}

/// Luxemburg norm: {"value", "bracket", "iterations"}.
#[pyfunction]
#[pyo3(signature = (f, p, tol=1e-9))]
fn luxemburg_norm<'py>(
    py: Python<'py>,
    f: &PyFunc,
    p: &PyExponent,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let n = norms::luxemburg_norm(&f.inner, &p.inner, tol, &QuadConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", n.value)?;
    d.set_item("bracket", n.bracket)?;
    d.set_item("iterations", n.iterations)?;
    Ok(d)
}

/// Finiteness threshold theta(f).
#[pyfunction]
#[pyo3(signature = (f, p, tol=1e-6))]
fn theta(f: &PyFunc, p: &PyExponent, tol: f64) -> PyResult<f64> {
    Ok(norms::theta(&f.inner, &p.inner, tol, &QuadConfig::default())
        .map_err(err)?
        .value)
}

/// Distance trace to the order-continuous part:
/// {"levels", "values", "limit_estimate", "theta", "converged"}.
#[pyfunction]
#[pyo3(signature = (f, p, schedule=None, tol=1e-3))]
fn distance_trace<'py>(
    py: Python<'py>,
    f: &PyFunc,
    p: &PyExponent,
    schedule: Option<Vec<u32>>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let schedule = schedule.unwrap_or_else(|| (1..=8).map(|k| 1 << k).collect());
    let trace = norms::distance_to_e(&f.inner, &p.inner, &schedule, tol, &QuadConfig::default())
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("levels", trace.levels)?;
    d.set_item("values", trace.values)?;
    d.set_item("limit_estimate", trace.limit_estimate)?;
    d.set_item("theta", trace.theta_crosscheck)?;
    d.set_item("converged", trace.converged)?;
    Ok(d)
}

/// Orlicz norm of a density (operator norm of the regular functional).
#[pyfunction]
#[pyo3(signature = (v, p, tol=1e-6))]
fn orlicz_norm(v: &PyFunc, p: &PyExponent, tol: f64) -> PyResult<f64> {
    Ok(norms::orlicz_norm(&v.inner, &p.inner, tol, &QuadConfig::default())
        .map_err(err)?
        .value)
}

/// Hoelder check: {"lhs", "rhs", "ratio"}.
#[pyfunction]
fn holder_check<'py>(
    py: Python<'py>,
    x: &PyFunc,
    v: &PyFunc,
    p: &PyExponent,
) -> PyResult<Bound<'py, PyDict>> {
    let hc = norms::holder_check(&x.inner, &v.inner, &p.inner, &QuadConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lhs", hc.lhs)?;
    d.set_item("rhs", hc.rhs)?;
    d.set_item("ratio", hc.ratio)?;
    Ok(d)
}

/// Closedness constants and verdict:
/// {"c_est", "C_est", "c1_est", "c2_est", "delta_est", "verdict",
///  "depth_series"}.
#[pyfunction]
#[pyo3(signature = (p, grid_depth=8, sample_count=40, seed=42))]
fn closedness<'py>(
    py: Python<'py>,
    p: &PyExponent,
    grid_depth: u32,
    sample_count: u32,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = analysis::closedness_constants(
        &p.inner,
        grid_depth,
        sample_count,
        seed,
        &QuadConfig::default(),
    )
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("c_est", rep.c_est)?;
    d.set_item("C_est", rep.c_upper)?;
    d.set_item("c1_est", rep.c1_est)?;
    d.set_item("c2_est", rep.c2_est)?;
    d.set_item("delta_est", rep.delta_est)?;
    d.set_item("verdict", rep.verdict.to_string())?;
    d.set_item("depth_series", rep.depth_series)?;
    Ok(d)
}

/// Run a TOML experiment config; returns the rows and writes the bundle
/// when `out` is given. Each row is (quantity, value, tolerance, verdict,
/// provenance).
#[pyfunction]
#[pyo3(signature = (config_text, out=None))]
fn run_experiment(
    config_text: &str,
    out: Option<std::path::PathBuf>,
) -> PyResult<Vec<(String, f64, f64, String, String)>> {
    let config = ExperimentConfig::from_toml(config_text).map_err(err)?;
    let bundle: ReportBundle = varlex::run_experiment(&config).map_err(err)?;
    if let Some(dir) = out.or(config.out.clone()) {
        bundle.write_to(&dir).map_err(err)?;
    }
    Ok(bundle
        .rows
        .iter()
        .map(|r| {
            (
                r.quantity.clone(),
                r.value,
                r.tolerance,
                r.verdict.to_string(),
                r.provenance.to_string(),
            )
        })
        .collect())
}

#[pymodule]
fn varlex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExponent>()?;
    m.add_class::<PyFunc>()?;
    m.add_function(wrap_pyfunction!(modular, m)?)?;
    m.add_function(wrap_pyfunction!(luxemburg_norm, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(distance_trace, m)?)?;
    m.add_function(wrap_pyfunction!(orlicz_norm, m)?)?;
    m.add_function(wrap_pyfunction!(holder_check, m)?)?;
    m.add_function(wrap_pyfunction!(closedness, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
