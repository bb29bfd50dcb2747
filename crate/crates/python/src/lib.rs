//! Python bindings. Rationals cross the boundary as `fractions.Fraction`;
//! inputs may be `int`, `Fraction` or strings such as `"3/7"` or `"0.25"`.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::sync::PyOnceLock;
use pyo3::types::{PyDict, PyList, PyString};

use transference_core::arith::{parse_rational, residual, RationalMatrix};
use transference_core::delta;
use transference_core::exponents::{self, Exponent, UniformMap};
use transference_core::search::{self, ApproxRecord, SearchBudget};
use transference_core::secdual::{self, AxisBox, SurdValue};
use transference_core::transfer::{self, FunctionSpec, VerifyOptions};
use transference_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Falsified(_) | Error::Inconclusive(_) | Error::PrecisionGuard { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

static FRACTION: PyOnceLock<Py<PyAny>> = PyOnceLock::new();

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    let cls = FRACTION.get_or_try_init(py, || -> PyResult<_> {
        Ok(py.import("fractions")?.getattr("Fraction")?.unbind())
    })?;
    cls.bind(py).call1((r.numer().clone(), r.denom().clone()))
}

fn fractions<'py>(py: Python<'py>, v: &[BigRational]) -> PyResult<Bound<'py, PyList>> {
    let items = v.iter().map(|r| fraction(py, r)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(s) = obj.cast::<PyString>() {
        return parse_rational(s.to_str()?).map_err(err);
    }
    if let Ok(v) = obj.extract::<BigInt>() {
        return Ok(BigRational::from_integer(v));
    }
    let num: BigInt = obj.getattr("numerator")?.extract()?;
    let den: BigInt = obj.getattr("denominator")?.extract()?;
    if den == BigInt::from(0) {
        return Err(PyValueError::new_err("zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

fn rationals(v: &[Bound<'_, PyAny>]) -> PyResult<Vec<BigRational>> {
    v.iter().map(rational).collect()
}

fn surd<'py>(py: Python<'py>, s: &SurdValue) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("coeff", fraction(py, &s.coeff)?)?;
    d.set_item("norm_sq", fraction(py, &s.norm_sq)?)?;
    d.set_item("value", s.to_f64())?;
    Ok(d)
}

/// The constant `Δ_d` as a Fraction.
#[pyfunction]
fn delta_value(py: Python<'_>, d: usize) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &delta::delta(d).map_err(err)?)
}

/// `[Δ_2, ..., Δ_dmax]`.
#[pyfunction]
fn delta_table(py: Python<'_>, dmax: usize) -> PyResult<Bound<'_, PyList>> {
    let table = delta::DeltaTable::new(dmax).map_err(err)?;
    let values: Vec<BigRational> = table.iter().map(|(_, v)| v.clone()).collect();
    fractions(py, &values)
}

/// Central section volume `coeff·√norm_sq` of the box `∏[−c_i, c_i]` normal to `e`.
#[pyfunction]
fn box_section_volume<'py>(
    py: Python<'py>,
    half_sides: Vec<Bound<'py, PyAny>>,
    direction: Vec<Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = AxisBox::new(rationals(&half_sides)?).map_err(err)?;
    surd(py, &secdual::box_section_volume(&b, &rationals(&direction)?).map_err(err)?)
}

/// A real `n × m` matrix with rational entries.
#[pyclass(module = "transference_lab", frozen)]
struct Matrix {
    inner: RationalMatrix,
}

#[pymethods]
impl Matrix {
    #[new]
    #[pyo3(signature = (rows, precision=None))]
    fn new(rows: Vec<Vec<Bound<'_, PyAny>>>, precision: Option<Bound<'_, PyAny>>) -> PyResult<Self> {
        let rows = rows.iter().map(|r| rationals(r)).collect::<PyResult<Vec<_>>>()?;
        let precision = precision.as_ref().map(rational).transpose()?;
        Ok(Self {
            inner: RationalMatrix::from_rows(rows).map_err(err)?.with_precision(precision),
        })
    }

    /// Number of columns (the dimension of `x`).
    #[getter]
    fn m(&self) -> usize {
        self.inner.cols()
    }

    /// Number of rows (the dimension of `y`).
    #[getter]
    fn n(&self) -> usize {
        self.inner.rows()
    }

    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyList>>> {
        self.inner.to_rows().iter().map(|r| fractions(py, r)).collect()
    }

    /// `Θx − y`.
    fn residual<'py>(&self, py: Python<'py>, x: Vec<i64>, y: Vec<i64>) -> PyResult<Bound<'py, PyList>> {
        fractions(py, &residual(&self.inner, &x, &y).map_err(err)?)
    }

    /// Best-approximation records with `|x|_∞ ≤ sup_bound`.
    fn best_approximations(&self, py: Python<'_>, sup_bound: u64) -> PyResult<Vec<Record>> {
        let budget = SearchBudget::new(sup_bound).map_err(err)?;
        let records = py
            .detach(|| search::best_approximations(&self.inner, &budget))
            .map_err(err)?;
        Ok(records.into_iter().map(|inner| Record { inner }).collect())
    }

    /// Certifies the transposed witness for the pair `(x, y)`.
    #[pyo3(signature = (x, y, mahler=false))]
    fn transfer(&self, py: Python<'_>, x: Vec<i64>, y: Vec<i64>, mahler: bool) -> PyResult<Certificate> {
        let options = VerifyOptions::default();
        let cert = py
            .detach(|| {
                if mahler {
                    transfer::verify_mahler(&self.inner, &x, &y, &options)
                } else {
                    transfer::verify_multitrans(&self.inner, &x, &y, &options)
                }
            })
            .map_err(err)?;
        Ok(Certificate { inner: cert })
    }

    fn __repr__(&self) -> String {
        let rows: Vec<String> = self
            .inner
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
            .collect();
        format!("Matrix([[{}]])", rows.join("], ["))
    }
}

/// One best-approximation record.
#[pyclass(module = "transference_lab", frozen)]
struct Record {
    inner: ApproxRecord,
}

#[pymethods]
impl Record {
    #[getter]
    fn x(&self) -> Vec<i64> {
        self.inner.x.clone()
    }

    #[getter]
    fn y(&self) -> Vec<i64> {
        self.inner.y.clone()
    }

    #[getter]
    fn shell(&self) -> u64 {
        self.inner.shell
    }

    /// `Π'(x)^m`.
    #[getter]
    fn t_pow<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.t_pow)
    }

    /// `Π(Θx − y)^n`.
    #[getter]
    fn u_pow<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.u_pow)
    }

    #[getter]
    fn residual<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        fractions(py, &self.inner.residual)
    }

    fn __repr__(&self) -> String {
        format!("Record(x={:?}, y={:?}, u_pow={})", self.inner.x, self.inner.y, self.inner.u_pow)
    }
}

/// A checked transference certificate.
#[pyclass(module = "transference_lab", frozen)]
struct Certificate {
    inner: transfer::Certificate,
}

#[pymethods]
impl Certificate {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("certificate serializes")
    }

    #[getter]
    fn all_hold(&self) -> bool {
        self.inner.all_hold
    }

    #[getter]
    fn witness_x(&self) -> Vec<i64> {
        self.inner.witness.x.clone()
    }

    #[getter]
    fn witness_y(&self) -> Vec<i64> {
        self.inner.witness.y.clone()
    }

    /// `(name, holds)` for every inequality.
    fn checks(&self) -> Vec<(String, bool)> {
        self.inner.checks.iter().map(|c| (c.name.clone(), c.holds)).collect()
    }

    /// Recomputes everything from the stored inputs.
    fn revalidate(&self) -> PyResult<bool> {
        Ok(transfer::revalidate(&self.inner).map_err(err)?.ok())
    }
}

/// `φ(s)` for `ψ(t) = t^{−γ}`.
#[pyfunction]
fn phi_power(gamma: f64, m: usize, n: usize, s: f64) -> PyResult<f64> {
    let (phi, _) = transfer::phi_from_psi(&FunctionSpec::Power { gamma }, m, n).map_err(err)?;
    phi.phi(s).map_err(err)
}

fn exponent(obj: &Bound<'_, PyAny>) -> PyResult<Exponent> {
    if let Ok(v) = obj.extract::<f64>() {
        if v == f64::INFINITY {
            return Ok(Exponent::Infinity);
        }
    }
    Ok(Exponent::Finite(rational(obj)?))
}

fn exponent_out<'py>(py: Python<'py>, e: &Exponent) -> PyResult<Bound<'py, PyAny>> {
    match e {
        Exponent::Finite(v) => fraction(py, v),
        Exponent::Infinity => Ok(f64::INFINITY.into_pyobject(py)?.into_any()),
    }
}

/// The uniform-exponent map applied to `γ` exactly; `inf` maps through.
#[pyfunction]
fn dyson_map<'py>(py: Python<'py>, gamma: Bound<'py, PyAny>, m: usize, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let bound = exponents::uniform_maps(&exponent(&gamma)?, m, n, UniformMap::Dyson).map_err(err)?;
    exponent_out(py, &bound.value)
}

/// `(β̂, β̂×)` from the tail of a record list.
#[pyfunction]
#[pyo3(signature = (records, m, n, tail=exponents::DEFAULT_TAIL_FRACTION))]
fn estimate_exponents(records: Vec<PyRef<'_, Record>>, m: usize, n: usize, tail: f64) -> PyResult<(f64, f64)> {
    let records: Vec<ApproxRecord> = records.iter().map(|r| r.inner.clone()).collect();
    let report = exponents::estimate_exponents(&records, m, n, tail).map_err(err)?;
    Ok((report.beta_est, report.mbeta_est))
}

/// Records `(q, q‖qα‖‖qβ‖)` for `q ≤ qmax`.
#[pyfunction]
fn littlewood_scan<'py>(
    py: Python<'py>,
    alpha: Bound<'py, PyAny>,
    beta: Bound<'py, PyAny>,
    qmax: u64,
) -> PyResult<Vec<(u64, Bound<'py, PyAny>)>> {
    let (a, b) = (rational(&alpha)?, rational(&beta)?);
    let records = py.detach(|| search::littlewood_scan(&a, &b, qmax, None)).map_err(err)?;
    records.iter().map(|r| Ok((r.q, fraction(py, &r.value)?))).collect()
}

#[pymodule]
fn transference_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(delta_value, m)?)?;
    m.add_function(wrap_pyfunction!(delta_table, m)?)?;
    m.add_function(wrap_pyfunction!(box_section_volume, m)?)?;
    m.add_function(wrap_pyfunction!(phi_power, m)?)?;
    m.add_function(wrap_pyfunction!(dyson_map, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(littlewood_scan, m)?)?;
    m.add_class::<Matrix>()?;
    m.add_class::<Record>()?;
    m.add_class::<Certificate>()?;
    Ok(())
}
