//! Python bindings: exact lattice sets, measure brackets, and certified
//! inequality checks. Rationals cross the boundary as `"k/m"` strings so
//! exactness survives the trip.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bmlab_core::checkers as ck;
use bmlab_core::density as de;
use bmlab_core::gridset as gs;
use bmlab_core::means;
use bmlab_core::rational::{format_rat, parse_rat};

fn err(e: bmlab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Lattice {
    inner: gs::Lattice,
}

#[pymethods]
impl Lattice {
    #[new]
    fn new(dim: usize, pitch: &str) -> PyResult<Self> {
        let pitch = parse_rat(pitch).map_err(err)?;
        Ok(Lattice { inner: gs::Lattice::new(dim, pitch).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn pitch(&self) -> String {
        format_rat(self.inner.pitch())
    }

    fn __repr__(&self) -> String {
        format!("Lattice(dim={}, pitch='{}')", self.inner.dim(), self.pitch())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct GridSet {
    inner: gs::GridSet,
}

#[pymethods]
impl GridSet {
    /// Build from a SetSpec JSON document on the given lattice.
    #[staticmethod]
    fn build(spec_json: &str, lattice: &Lattice) -> PyResult<Self> {
        let spec: gs::SetSpec =
            serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(GridSet { inner: gs::build_set(&spec, &lattice.inner).map_err(err)? })
    }

    #[staticmethod]
    fn from_cells(lattice: &Lattice, cells: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(GridSet { inner: gs::GridSet::from_cells(lattice.inner, cells).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn pitch(&self) -> String {
        format_rat(self.inner.pitch())
    }

    fn cells(&self) -> Vec<Vec<i64>> {
        self.inner.cells().map(|c| c.to_vec()).collect()
    }

    fn spec_json(&self) -> String {
        serde_json::to_string(&gs::SetSpec::from_set(&self.inner)).expect("serializable")
    }

    /// Exact convex combination `(1-lam) self + lam other`.
    fn combine(&self, other: &GridSet, lam: &str) -> PyResult<Self> {
        let lam = means::Lambda::parse(lam).map_err(err)?;
        let (a, b) = gs::common_pitch(&self.inner, &other.inner).map_err(err)?;
        Ok(GridSet { inner: gs::combine(&a, &b, lam).map_err(err)? })
    }

    fn minkowski_sum(&self, other: &GridSet) -> PyResult<Self> {
        let (a, b) = gs::common_pitch(&self.inner, &other.inner).map_err(err)?;
        Ok(GridSet { inner: gs::minkowski_sum(&a, &b).map_err(err)? })
    }

    fn scale(&self, t: &str) -> PyResult<Self> {
        Ok(GridSet { inner: gs::scale(&self.inner, parse_rat(t).map_err(err)?).map_err(err)? })
    }

    fn translate(&self, by: Vec<String>) -> PyResult<Self> {
        let by = by
            .iter()
            .map(|s| parse_rat(s))
            .collect::<bmlab_core::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(GridSet { inner: gs::translate(&self.inner, &by).map_err(err)? })
    }

    fn wu_hull(&self) -> PyResult<Self> {
        Ok(GridSet { inner: gs::wu_hull(&self.inner).map_err(err)? })
    }

    fn u_hull(&self) -> PyResult<Self> {
        Ok(GridSet { inner: gs::u_hull(&self.inner).map_err(err)? })
    }

    fn is_weakly_unconditional(&self) -> bool {
        gs::is_weakly_unconditional(&self.inner)
    }

    fn refine(&self, r: i64) -> Self {
        GridSet { inner: self.inner.refine(r) }
    }

    fn point_set_eq(&self, other: &GridSet) -> PyResult<bool> {
        self.inner.point_set_eq(&other.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("GridSet(dim={}, pitch='{}', cells={})", self.inner.dim(), self.pitch(), self.inner.len())
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Density {
    inner: de::DensityND,
}

#[pymethods]
impl Density {
    #[staticmethod]
    fn gaussian(sigma: f64, dim: usize) -> Density {
        Density { inner: de::DensityND::gaussian(sigma, dim) }
    }

    #[staticmethod]
    fn lebesgue(dim: usize) -> Density {
        Density { inner: de::DensityND::lebesgue(dim) }
    }

    #[staticmethod]
    fn nonproduct_square() -> Density {
        Density { inner: de::DensityND::NonproductSquare }
    }

    /// Build from a DensitySpec JSON document.
    #[staticmethod]
    fn from_json(spec_json: &str) -> PyResult<Density> {
        let spec: de::DensitySpec =
            serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Density { inner: spec.to_density().map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __call__(&self, x: Vec<f64>) -> f64 {
        self.inner.eval(&x)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Bracket {
    lower: f64,
    upper: f64,
    rigorous: bool,
}

#[pymethods]
impl Bracket {
    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn __repr__(&self) -> String {
        format!("Bracket(lower={}, upper={}, rigorous={})", self.lower, self.upper, self.rigorous)
    }
}

impl From<de::MeasureBracket> for Bracket {
    fn from(m: de::MeasureBracket) -> Bracket {
        Bracket { lower: m.lower, upper: m.upper, rigorous: m.rigorous }
    }
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Verdict {
    status: String,
    hold_margin: f64,
    violation_margin: f64,
    rigorous: bool,
    gates_passed: bool,
    lhs: Bracket,
    rhs: Bracket,
    mu_a: Bracket,
    mu_b: Bracket,
}

#[pymethods]
impl Verdict {
    fn __repr__(&self) -> String {
        format!(
            "Verdict(status='{}', hold_margin={:.6}, violation_margin={:.6})",
            self.status, self.hold_margin, self.violation_margin
        )
    }
}

impl From<ck::Verdict> for Verdict {
    fn from(v: ck::Verdict) -> Verdict {
        Verdict {
            status: v.status.as_str().to_string(),
            hold_margin: v.hold_margin,
            violation_margin: v.violation_margin,
            rigorous: v.rigorous,
            gates_passed: v.gates_passed(),
            lhs: v.lhs.into(),
            rhs: v.rhs.into(),
            mu_a: v.mu_a.into(),
            mu_b: v.mu_b.into(),
        }
    }
}

/// Rigorous measure bracket of a set, optionally on an exact refinement of
/// its pitch.
#[pyfunction]
#[pyo3(signature = (set, density, refine=1))]
fn measure(set: &GridSet, density: &Density, refine: i64) -> PyResult<Bracket> {
    Ok(de::measure_refined(&set.inner, &density.inner, refine).map_err(err)?.into())
}

/// p-th mean with the `a·b = 0 -> 0` convention.
#[pyfunction]
fn p_mean(a: f64, b: f64, lam: &str, p: &str) -> PyResult<f64> {
    let lam = means::Lambda::parse(lam).map_err(err)?;
    let p = means::PParam::parse(p).map_err(err)?;
    Ok(means::p_mean(means::ExtReal::finite(a), means::ExtReal::finite(b), lam, p).to_f64())
}

/// Raw power combination without the zero convention.
#[pyfunction]
fn raw_power_combination(a: f64, b: f64, lam: &str, p: &str) -> PyResult<f64> {
    let lam = means::Lambda::parse(lam).map_err(err)?;
    let p = means::PParam::parse(p).map_err(err)?;
    Ok(means::raw_power_combination(means::ExtReal::finite(a), means::ExtReal::finite(b), lam, p).to_f64())
}

/// Certified Brunn-Minkowski check with `C = (1-lam)A + lam B` exact.
#[pyfunction]
#[pyo3(signature = (a, b, lam, p, density, general=false, measure_refine=1))]
fn check_bm(
    a: &GridSet,
    b: &GridSet,
    lam: &str,
    p: &str,
    density: &Density,
    general: bool,
    measure_refine: i64,
) -> PyResult<Verdict> {
    let lam = means::Lambda::parse(lam).map_err(err)?;
    let p = means::PParam::parse(p).map_err(err)?;
    let opts = ck::BmOptions { general, weight_q: None, measure_refine };
    Ok(ck::check_bm(&a.inner, &b.inner, lam, p, &density.inner, &opts).map_err(err)?.into())
}

/// Weakly unconditional product suite (gates + BM(1/n)).
#[pyfunction]
#[pyo3(signature = (a, b, lam, density, measure_refine=1))]
fn check_theorem_a(
    a: &GridSet,
    b: &GridSet,
    lam: &str,
    density: &Density,
    measure_refine: i64,
) -> PyResult<Verdict> {
    let lam = means::Lambda::parse(lam).map_err(err)?;
    let opts = ck::BmOptions { general: false, weight_q: None, measure_refine };
    Ok(ck::check_theorem_a(&a.inner, &b.inner, lam, &density.inner, &opts).map_err(err)?.into())
}

/// Exact Gaussian box mass via the error function (test oracle).
#[pyfunction]
fn gaussian_box_oracle(bounds: Vec<(f64, f64)>, sigma: f64) -> f64 {
    de::gaussian_box_oracle(&bounds, sigma)
}

/// Runs a named reproduction; returns `(reproduced, report_text)`.
#[pyfunction]
#[pyo3(signature = (name, params=None))]
fn run_repro(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<(bool, String)> {
    let mut overrides = BTreeMap::new();
    if let Some(d) = params {
        for (k, v) in d.iter() {
            overrides.insert(k.extract::<String>()?, v.extract::<String>()?);
        }
    }
    let out = ck::run_repro(name, &overrides).map_err(err)?;
    Ok((out.reproduced, out.report))
}

#[pymodule]
fn bmlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lattice>()?;
    m.add_class::<GridSet>()?;
    m.add_class::<Density>()?;
    m.add_class::<Bracket>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(p_mean, m)?)?;
    m.add_function(wrap_pyfunction!(raw_power_combination, m)?)?;
    m.add_function(wrap_pyfunction!(check_bm, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem_a, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_box_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_repro, m)?)?;
    m.add("REPRO_NAMES", ck::REPRO_NAMES.to_vec())?;
    Ok(())
}
