//! Python bindings: charts, line tracing, classifiers and model surfaces.
//! Structured results are returned as plain dicts and lists.

use gmc_core::bde::{gmc_directions_at, Branch};
use gmc_core::export::polyline_csv;
use gmc_core::flow::{arc, trace_with, transition_report, Polyline, TraceOptions};
use gmc_core::models::{ellipsoid_data, torus_rho_report};
use gmc_core::parabolic::{classify_parabolic_point, MongeJet4};
use gmc_core::surface::{orient_positive, ChartDescription, ChartPoint, SurfaceChart};
use gmc_core::umbilic::{classify_gmc_umbilic, MongeJet3};
use gmc_core::{GmcError, QuadConfig, ToleranceConfig, TraceConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: GmcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable value to Python objects through JSON.
fn to_py<T: Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_branch(name: &str) -> PyResult<Branch> {
    match name {
        "minimal" | "min" => Ok(Branch::Minimal),
        "maximal" | "max" => Ok(Branch::Maximal),
        _ => Err(PyValueError::new_err(format!("unknown branch '{name}'"))),
    }
}

/// A parametrized surface patch.
#[pyclass(name = "Chart", module = "gmc", frozen)]
struct PyChart {
    inner: SurfaceChart,
    description: String,
}

#[pymethods]
impl PyChart {
    /// Chart from the JSON description used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let d: ChartDescription = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: d.build().map_err(err)?,
            description: text.to_string(),
        })
    }

    #[staticmethod]
    #[pyo3(name = "torus")]
    fn torus_py(r: f64, big_r: f64) -> PyResult<Self> {
        Self::from_json(&format!(r#"{{"kind":"torus","r":{r},"R":{big_r}}}"#))
    }

    #[staticmethod]
    #[pyo3(name = "ellipsoid", signature = (a, b, c, coords = "angular"))]
    fn ellipsoid_py(a: f64, b: f64, c: f64, coords: &str) -> PyResult<Self> {
        Self::from_json(&format!(r#"{{"kind":"ellipsoid","a":{a},"b":{b},"c":{c},"coords":"{coords}"}}"#))
    }

    /// Monge graph z = sum c x^i y^j from (i, j, c) terms.
    #[staticmethod]
    #[pyo3(name = "monge", signature = (terms, domain = None))]
    fn monge_py(terms: Vec<(usize, usize, f64)>, domain: Option<[f64; 4]>) -> PyResult<Self> {
        let d = ChartDescription::Monge {
            coeffs: terms,
            domain,
            orientation: 1.0,
        };
        Self::from_json(&serde_json::to_string(&d).expect("serializable chart"))
    }

    /// Chart with its normal flipped if needed so that k1, k2 > 0 at (u, v).
    fn oriented(&self, u: f64, v: f64) -> PyResult<Self> {
        let inner = orient_positive(&self.inner, ChartPoint::new(u, v), &ToleranceConfig::default()).map_err(err)?;
        Ok(Self {
            inner,
            description: self.description.clone(),
        })
    }

    fn position(&self, u: f64, v: f64) -> PyResult<[f64; 3]> {
        let x = self.inner.position(ChartPoint::new(u, v)).map_err(err)?;
        Ok([x.x, x.y, x.z])
    }

    /// Forms, curvatures and both GMC directions at (u, v).
    fn geometry(&self, py: Python<'_>, u: f64, v: f64) -> PyResult<Py<PyAny>> {
        let tol = ToleranceConfig::default();
        let g = self.inner.geometry(ChartPoint::new(u, v), &tol).map_err(err)?;
        let dirs = gmc_directions_at(&g, &tol).ok();
        to_py(
            py,
            &serde_json::json!({
                "forms": g.forms,
                "curvature": g.curvature,
                "normal": [g.normal.x, g.normal.y, g.normal.z],
                "directions": dirs,
            }),
        )
    }

    fn __repr__(&self) -> String {
        format!("Chart({})", self.description)
    }
}

/// A traced GMC line.
#[pyclass(name = "Polyline", module = "gmc", frozen)]
struct PyPolyline {
    inner: Polyline,
}

#[pymethods]
impl PyPolyline {
    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn stop(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.stop)
    }

    #[getter]
    fn branch(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.branch)
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.samples.iter().map(|s| (s.point.u, s.point.v)).collect()
    }

    fn samples(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.samples)
    }

    fn switches(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.switches)
    }

    fn to_csv(&self) -> String {
        polyline_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

/// Traces the `branch` line ("minimal" or "maximal") through (u, v).
#[pyfunction]
#[pyo3(signature = (chart, u, v, branch, max_length = 10.0, step = 0.02, extended = false))]
fn trace(
    chart: &PyChart,
    u: f64,
    v: f64,
    branch: &str,
    max_length: f64,
    step: f64,
    extended: bool,
) -> PyResult<PyPolyline> {
    let cfg = TraceConfig {
        max_arclength: max_length,
        step_target: step,
        ..Default::default()
    };
    let mut opts = TraceOptions::new(cfg);
    opts.extended = extended;
    let line = trace_with(&chart.inner, ChartPoint::new(u, v), parse_branch(branch)?, None, &opts).map_err(err)?;
    Ok(PyPolyline { inner: line })
}

/// Integral and cross-section transition derivatives along a traced line.
#[pyfunction]
#[pyo3(signature = (chart, line, offset = 1e-2))]
fn transition(py: Python<'_>, chart: &PyChart, line: &PyPolyline, offset: f64) -> PyResult<Py<PyAny>> {
    let n = (line.inner.samples.len() - 1) & !1;
    let a = arc(&line.inner, 0, n).map_err(err)?;
    let cfg = TraceConfig::default();
    let rep = transition_report(&chart.inner, &a, offset, &cfg, &ToleranceConfig::default()).map_err(err)?;
    to_py(py, &rep)
}

/// Classification of an umbilic with cubic jet (k, a, b, c).
#[pyfunction]
fn classify_umbilic(py: Python<'_>, k: f64, a: f64, b: f64, c: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &classify_gmc_umbilic(&MongeJet3::new(k, a, b, c), &ToleranceConfig::default()))
}

/// Classification of a parabolic point from its quartic jet.
#[pyfunction]
#[pyo3(signature = (k, a, b, c, d, big_a = 0.0, big_b = 0.0, big_c = 0.0, big_d = 0.0, e4 = 0.0))]
#[allow(clippy::too_many_arguments)]
fn classify_parabolic(
    py: Python<'_>,
    k: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    big_a: f64,
    big_b: f64,
    big_c: f64,
    big_d: f64,
    e4: f64,
) -> PyResult<Py<PyAny>> {
    let j = MongeJet4 {
        k,
        a,
        b,
        c,
        d,
        big_a,
        big_b,
        big_c,
        big_d,
        e4,
    };
    to_py(py, &classify_parabolic_point(&j, &ToleranceConfig::default()).map_err(err)?)
}

/// Rotation number report of the torus with r/R = `ratio`.
#[pyfunction]
fn torus_rho(py: Python<'_>, ratio: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &torus_rho_report(ratio, &QuadConfig::default()).map_err(err)?)
}

/// Umbilics, periods and rotation number of the ellipsoid (a, b, c).
#[pyfunction]
fn ellipsoid(py: Python<'_>, a: f64, b: f64, c: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &ellipsoid_data(a, b, c, &QuadConfig::default()).map_err(err)?)
}

#[pymodule]
fn gmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChart>()?;
    m.add_class::<PyPolyline>()?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(classify_umbilic, m)?)?;
    m.add_function(wrap_pyfunction!(classify_parabolic, m)?)?;
    m.add_function(wrap_pyfunction!(torus_rho, m)?)?;
    m.add_function(wrap_pyfunction!(ellipsoid, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_names() {
        assert_eq!(parse_branch("min").unwrap(), Branch::Minimal);
        assert_eq!(parse_branch("maximal").unwrap(), Branch::Maximal);
    }
}
