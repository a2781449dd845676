//! Python module `weyl_lab`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use weyl_core::error::WeylError;
use weyl_core::{exactzero, explore, families, fractal, sumcore};

fn to_py(e: WeylError) -> PyErr {
    if e.is_contract_violation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A point of the torus; coordinates are reduced mod 1.
#[pyclass(name = "TorusPoint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTorusPoint(sumcore::TorusPoint);

#[pymethods]
impl PyTorusPoint {
    #[new]
    fn new(coords: Vec<f64>) -> PyResult<Self> {
        sumcore::TorusPoint::new(&coords).map(Self).map_err(to_py)
    }

    #[getter]
    fn coords(&self) -> Vec<f64> {
        self.0.coords()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn __repr__(&self) -> String {
        format!("TorusPoint({:?})", self.0.coords())
    }
}

/// Exact rational point `(a_1, ..., a_d) / m`.
#[pyclass(name = "RationalPoint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRationalPoint(exactzero::RationalPoint);

#[pymethods]
impl PyRationalPoint {
    #[new]
    fn new(numerators: Vec<u64>, modulus: u64) -> PyResult<Self> {
        exactzero::RationalPoint::new(&numerators, modulus)
            .map(Self)
            .map_err(to_py)
    }

    /// Parse `a1,...,ad/m`.
    #[staticmethod]
    fn parse(s: &str) -> PyResult<Self> {
        s.parse().map(Self).map_err(to_py)
    }

    #[getter]
    fn numerators(&self) -> Vec<u64> {
        self.0.numerators().to_vec()
    }

    #[getter]
    fn modulus(&self) -> u64 {
        self.0.modulus()
    }

    fn to_torus(&self) -> PyTorusPoint {
        PyTorusPoint(self.0.to_torus())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("RationalPoint('{}')", self.0)
    }
}

/// Random Cantor set realization.
#[pyclass(name = "CantorRealization", frozen)]
struct PyCantor(fractal::CantorRealization);

#[pymethods]
impl PyCantor {
    #[new]
    #[pyo3(signature = (depth, seed = 0))]
    fn new(depth: u32, seed: u64) -> PyResult<Self> {
        fractal::cantor_sample(depth, seed).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_text(s: &str) -> PyResult<Self> {
        fractal::CantorRealization::from_text(s).map(Self).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.0.depth
    }

    #[getter]
    fn kept_count(&self) -> u64 {
        self.0.kept_count()
    }

    /// mu_n of the rectangle `(x0, y0, x1, y1)`.
    fn measure(&self, rect: (f64, f64, f64, f64)) -> PyResult<f64> {
        let r = fractal::Rect::new(rect.0, rect.1, rect.2, rect.3).map_err(to_py)?;
        Ok(fractal::cantor_measure(&self.0, &r))
    }

    /// Exact measure as a `(numerator, denominator)` string pair.
    fn measure_exact(&self, rect: (f64, f64, f64, f64)) -> PyResult<(String, String)> {
        let r = fractal::Rect::new(rect.0, rect.1, rect.2, rect.3).map_err(to_py)?;
        let m = fractal::cantor_measure_exact(&self.0, &fractal::RationalRect::from_rect(&r));
        Ok((m.numer().to_string(), m.denom().to_string()))
    }

    #[pyo3(signature = (count, seed = 0))]
    fn draw(&self, count: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
        fractal::cantor_draw(&self.0, seed, count).map_err(to_py)
    }
}

#[pyfunction]
fn eval_direct(x: &PyTorusPoint, n: u64) -> PyResult<Complex64> {
    sumcore::eval_direct(&x.0, n).map_err(to_py)
}

#[pyfunction]
fn eval_incremental(x: &PyTorusPoint, n: u64) -> PyResult<Complex64> {
    sumcore::eval_incremental(&x.0, n).map_err(to_py)
}

/// `S(N)` at every multiple of `stride` up to `n_max`, as `(N, S)` pairs.
#[pyfunction]
fn trace(x: &PyTorusPoint, n_max: u64, stride: u64) -> PyResult<Vec<(u64, Complex64)>> {
    let t = sumcore::trace(&x.0, n_max, stride).map_err(to_py)?;
    Ok(t.checkpoints.iter().copied().zip(t.complex_values()).collect())
}

#[pyfunction]
#[pyo3(signature = (point, span = None))]
fn certify_zero<'py>(py: Python<'py>, point: &PyRationalPoint, span: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let c = exactzero::certify_zero(&point.0, span.unwrap_or(point.0.modulus())).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("point", c.point.to_string())?;
    d.set_item("span", c.span)?;
    d.set_item("mechanism", c.mechanism.as_str())?;
    d.set_item("verified", c.verified)?;
    d.set_item("residual", c.residual)?;
    Ok(d)
}

/// Members of a vanishing family as `(params, point, span, degenerate)`.
#[pyfunction]
#[pyo3(signature = (family, p, d = 2))]
fn enumerate_family(family: &str, p: u64, d: usize) -> PyResult<Vec<(Vec<u64>, PyRationalPoint, u64, bool)>> {
    let fam: families::Family = family.parse().map_err(to_py)?;
    let pts = families::enumerate_family(fam, p, d).map_err(to_py)?;
    Ok(pts
        .into_iter()
        .map(|fp| (fp.params, PyRationalPoint(fp.point), fp.vanishing_span, fp.degenerate))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (family, d = 3, depth = 3, seed = 0))]
fn build_dio_point<'py>(py: Python<'py>, family: &str, d: usize, depth: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let fam: families::DioFamily = family.parse().map_err(to_py)?;
    let pt = families::build_dio_point(fam, d, depth, seed).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("family", fam.as_str())?;
    out.set_item("degree", pt.degree)?;
    out.set_item("approx", PyTorusPoint(pt.approx.clone()))?;
    out.set_item("midpoint", PyTorusPoint(pt.midpoint()))?;
    out.set_item("primes", pt.witnesses.iter().map(|w| w.prime).collect::<Vec<_>>())?;
    out.set_item("margins", pt.witnesses.iter().map(|w| w.margin).collect::<Vec<_>>())?;
    out.set_item("verified", pt.verify().is_ok())?;
    Ok(out)
}

/// `(min_abs, argmin_n)` over `N <= n_max`.
#[pyfunction]
fn liminf_estimate(x: &PyTorusPoint, n_max: u64) -> PyResult<(f64, u64)> {
    let e = explore::liminf_estimate(&x.0, n_max).map_err(to_py)?;
    Ok((e.min_abs, e.argmin_n))
}

#[pyfunction]
#[pyo3(signature = (x, n_max, window = 64.0, grid = 256))]
fn orbit_stats<'py>(py: Python<'py>, x: &PyTorusPoint, n_max: u64, window: f64, grid: usize) -> PyResult<Bound<'py, PyDict>> {
    let o = explore::orbit_stats(&x.0, n_max, window, grid).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("max_abs", o.max_abs)?;
    d.set_item("argmax_n", o.argmax_n)?;
    d.set_item("visited_fraction", o.visited_fraction)?;
    d.set_item("line_direction", o.line_fit.direction)?;
    d.set_item("max_residual", o.line_fit.max_residual)?;
    d.set_item("growth_exponent", o.growth_exponent)?;
    Ok(d)
}

/// Partial quotients of the fractional part of `x` as decimal strings.
#[pyfunction]
fn cf_expand(x: f64, k: usize) -> PyResult<(Vec<String>, usize)> {
    let e = explore::cf_expand(x, k).map_err(to_py)?;
    Ok((e.quotients.iter().map(|q| q.to_string()).collect(), e.reliable_depth))
}

/// `(scales, counts, slope, r2)`.
#[pyfunction]
fn box_count(points: Vec<Vec<f64>>, k_min: u32, k_max: u32) -> PyResult<(Vec<u32>, Vec<u64>, f64, f64)> {
    let r = fractal::box_count(&points, k_min, k_max).map_err(to_py)?;
    Ok((r.scales, r.counts, r.slope, r.r2))
}

/// `(mean, stderr, lebesgue_area)`.
#[pyfunction]
#[pyo3(signature = (rect, depth, trials, seed = 0))]
fn cantor_expectation(rect: (f64, f64, f64, f64), depth: u32, trials: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let r = fractal::Rect::new(rect.0, rect.1, rect.2, rect.3).map_err(to_py)?;
    let e = fractal::cantor_expectation_test(&r, depth, trials, seed).map_err(to_py)?;
    Ok((e.mean, e.stderr, e.lebesgue_area))
}

#[pymodule]
fn weyl_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTorusPoint>()?;
    m.add_class::<PyRationalPoint>()?;
    m.add_class::<PyCantor>()?;
    m.add_function(wrap_pyfunction!(eval_direct, m)?)?;
    m.add_function(wrap_pyfunction!(eval_incremental, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(certify_zero, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_family, m)?)?;
    m.add_function(wrap_pyfunction!(build_dio_point, m)?)?;
    m.add_function(wrap_pyfunction!(liminf_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_stats, m)?)?;
    m.add_function(wrap_pyfunction!(cf_expand, m)?)?;
    m.add_function(wrap_pyfunction!(box_count, m)?)?;
    m.add_function(wrap_pyfunction!(cantor_expectation, m)?)?;
    Ok(())
}
