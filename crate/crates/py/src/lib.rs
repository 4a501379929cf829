//! Python bindings. Rationals cross the boundary as strings (`"3/8"`,
//! `"-2"`), so `fractions.Fraction` and `int` arguments work through `str()`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use qbilateral::cauchy::{self, FamilyId, FiniteIdentityFamily, ProofTrace};
use qbilateral::identities::{self, IdentityId, IdentityInstance, VerificationReport};
use qbilateral::numerics::{format_rational, parse_rational, PrecisionContext, Rational};
use qbilateral::qfactorial::{self, PochValue, QBase};
use qbilateral::series::{self, ConvergenceDomain, SeriesKind, SeriesSpec, TruncationPolicy, VWPSpec};

create_exception!(pyqbilateral, QSeriesError, PyValueError, "Domain, parse or invalid-instance error.");

fn err(e: qbilateral::Error) -> PyErr {
    QSeriesError::new_err(e.to_string())
}

fn rational(x: &Bound<'_, PyAny>) -> PyResult<Rational> {
    parse_rational(x.str()?.to_str()?).map_err(err)
}

fn rationals(xs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rational>> {
    xs.iter().map(rational).collect()
}

fn base(q: &Bound<'_, PyAny>) -> PyResult<QBase> {
    QBase::new(rational(q)?).map_err(err)
}

fn settings(prec: u32, tol: &str) -> PyResult<(TruncationPolicy, PrecisionContext)> {
    let eps = parse_rational(tol).map_err(err)?;
    let ctx = PrecisionContext::new(prec, eps.clone()).map_err(err)?;
    let policy = TruncationPolicy::new(10_000, eps, None).map_err(err)?;
    Ok((policy, ctx))
}

fn param_map(params: &Bound<'_, PyDict>) -> PyResult<BTreeMap<String, Rational>> {
    let mut out = BTreeMap::new();
    for (k, v) in params.iter() {
        let name: String = k.extract()?;
        let name = match name.as_str() {
            "bp" | "b_prime" => "b'".to_string(),
            _ => name,
        };
        out.insert(name, rational(&v)?);
    }
    Ok(out)
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value as J;
    match v {
        J::Null => Ok(py.None().into_bound(py)),
        J::Bool(b) => b.into_bound_py_any(py),
        J::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py),
            None => n.as_f64().into_bound_py_any(py),
        },
        J::String(s) => s.into_bound_py_any(py),
        J::Array(xs) => {
            let items = xs.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_bound_py_any(py)
        }
        J::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_bound_py_any(py)
        }
    }
}

fn value_dict<'py>(py: Python<'py>, value: String, err: String, exact: bool) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", value)?;
    d.set_item("err", err)?;
    d.set_item("exact", exact)?;
    Ok(d)
}

/// `(a; q)_k` as an exact string, `"pole"`, or for `k = "inf"` a decimal
/// enclosure `"v ± e"`.
#[pyfunction]
#[pyo3(signature = (a, k, q, prec = 256, tol = "1e-30"))]
fn poch(a: &Bound<'_, PyAny>, k: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>, prec: u32, tol: &str) -> PyResult<String> {
    let (a, base) = (rational(a)?, base(q)?);
    let k = k.str()?.to_string();
    if k.eq_ignore_ascii_case("inf") {
        let (_, ctx) = settings(prec, tol)?;
        return Ok(qfactorial::poch_infinite(&a, &base, &ctx).to_string());
    }
    let k: i64 = k.parse().map_err(|_| PyValueError::new_err(format!("k must be an integer or 'inf', got {k}")))?;
    Ok(match qfactorial::poch_int(&a, k, &base) {
        PochValue::Finite(x) => format_rational(&x),
        PochValue::Pole => "pole".into(),
    })
}

/// Sum of a unilateral (`"uni"`) or bilateral (`"bi"`) series.
#[pyfunction]
#[pyo3(signature = (kind, upper, lower, arg, q, prec = 256, tol = "1e-30"))]
#[allow(clippy::too_many_arguments)]
fn eval_series<'py>(
    py: Python<'py>,
    kind: &str,
    upper: Vec<Bound<'py, PyAny>>,
    lower: Vec<Bound<'py, PyAny>>,
    arg: &Bound<'py, PyAny>,
    q: &Bound<'py, PyAny>,
    prec: u32,
    tol: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = match kind {
        "uni" => SeriesKind::Unilateral,
        "bi" => SeriesKind::Bilateral,
        other => return Err(PyValueError::new_err(format!("kind must be 'uni' or 'bi', got {other:?}"))),
    };
    let spec = SeriesSpec::new(kind, rationals(&upper)?, rationals(&lower)?, rational(arg)?, base(q)?).map_err(err)?;
    if series::convergence_domain(&spec) == ConvergenceDomain::Terminating {
        let v = series::eval_terminating(&spec).map_err(err)?;
        return value_dict(py, format_rational(&v), "0".into(), true);
    }
    let (policy, ctx) = settings(prec, tol)?;
    let v = series::eval_bilateral(&spec, &policy, &ctx).map_err(err)?;
    value_dict(py, v.value_string(), v.err_string(), false)
}

/// Sum of the very-well-poised bilateral series with tail parameters `tail`.
#[pyfunction]
#[pyo3(signature = (a, tail, arg, q, prec = 256, tol = "1e-30"))]
fn eval_vwp<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    tail: Vec<Bound<'py, PyAny>>,
    arg: &Bound<'py, PyAny>,
    q: &Bound<'py, PyAny>,
    prec: u32,
    tol: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = VWPSpec::new(rational(a)?, rationals(&tail)?, rational(arg)?, base(q)?).map_err(err)?;
    if series::vwp_convergence_domain(&spec) == ConvergenceDomain::Terminating {
        let v = series::eval_vwp_terminating(&spec).map_err(err)?;
        return value_dict(py, format_rational(&v), "0".into(), true);
    }
    let (policy, ctx) = settings(prec, tol)?;
    let v = series::eval_vwp_bilateral(&spec, &policy, &ctx).map_err(err)?;
    value_dict(py, v.value_string(), v.err_string(), false)
}

/// A parameter point of one catalog identity (`"I1"` … `"I9"`).
#[pyclass(name = "Instance", module = "pyqbilateral", frozen)]
struct PyInstance(IdentityInstance);

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (id, params, q, n = None))]
    fn new(id: &str, params: &Bound<'_, PyDict>, q: &Bound<'_, PyAny>, n: Option<u64>) -> PyResult<Self> {
        let id: IdentityId = id.parse().map_err(err)?;
        IdentityInstance::new(id, param_map(params)?, n, base(q)?).map(PyInstance).map_err(err)
    }

    /// A deterministic valid instance for `seed`.
    #[staticmethod]
    fn sample(id: &str, seed: u64, q: &Bound<'_, PyAny>) -> PyResult<Self> {
        let id: IdentityId = id.parse().map_err(err)?;
        identities::sample_valid_instance(id, seed, &base(q)?).map(PyInstance).map_err(err)
    }

    #[getter]
    fn id(&self) -> &'static str {
        self.0.id().code()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, String> {
        self.0.params().iter().map(|(k, v)| (k.clone(), format_rational(v))).collect()
    }

    #[getter]
    fn n(&self) -> Option<u64> {
        self.0.n()
    }

    #[getter]
    fn q(&self) -> String {
        format_rational(self.0.base().q())
    }

    #[pyo3(signature = (prec = 256, tol = "1e-30"))]
    fn verify(&self, prec: u32, tol: &str) -> PyResult<PyReport> {
        let (policy, ctx) = settings(prec, tol)?;
        Ok(PyReport(identities::verify(&self.0, &policy, &ctx)))
    }

    fn __repr__(&self) -> String {
        let p: Vec<String> = self.params().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let n = self.0.n().map(|n| format!(", n={n}")).unwrap_or_default();
        format!("Instance({}, {}{n}, q={})", self.id(), p.join(","), self.q())
    }
}

/// Outcome of comparing both sides of an identity.
#[pyclass(name = "Report", module = "pyqbilateral", frozen)]
struct PyReport(VerificationReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn verdict(&self) -> String {
        self.0.verdict.to_string()
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode.to_string()
    }

    #[getter]
    fn passed(&self) -> bool {
        self.0.verdict == identities::Verdict::Pass
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        self.0.reason.clone()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.to_json())
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }

    fn __repr__(&self) -> String {
        format!("Report({})", self.0.to_json())
    }
}

/// A replayed derivation: ordered checked steps and an overall verdict.
#[pyclass(name = "Trace", module = "pyqbilateral", frozen)]
struct PyTrace(ProofTrace);

#[pymethods]
impl PyTrace {
    #[getter]
    fn target(&self) -> &'static str {
        self.0.target.code()
    }

    #[getter]
    fn verdict(&self) -> String {
        self.0.verdict.to_string()
    }

    #[getter]
    fn steps<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.to_json()["steps"])
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }

    fn __repr__(&self) -> String {
        format!("Trace({}, {} steps, {})", self.target(), self.0.steps.len(), self.verdict())
    }
}

/// Replays `"1psi1"` (params a, b, z) or `"6psi6"` (params a, c, d, e, f).
#[pyfunction]
#[pyo3(signature = (which, params, q, ns = vec![10, 20, 40], prec = 256, tol = "1e-30"))]
fn replay(
    which: &str,
    params: &Bound<'_, PyDict>,
    q: &Bound<'_, PyAny>,
    ns: Vec<u64>,
    prec: u32,
    tol: &str,
) -> PyResult<PyTrace> {
    let (policy, ctx) = settings(prec, tol)?;
    let (p, base) = (param_map(params)?, base(q)?);
    let trace = match which.to_ascii_lowercase().as_str() {
        "1psi1" => cauchy::replay_1psi1(&p, &base, &policy, &ctx, &ns),
        "6psi6" => cauchy::replay_6psi6(&p, &base, &policy, &ctx, &ns),
        other => return Err(PyValueError::new_err(format!("unknown derivation {other:?}"))),
    };
    trace.map(PyTrace).map_err(err)
}

/// Exact residual of one finite display family at order `n`; `"0"` when
/// every member agrees.
#[pyfunction]
fn check_display(family: &str, n: u64, params: &Bound<'_, PyDict>, q: &Bound<'_, PyAny>) -> PyResult<String> {
    let id: FamilyId = family.parse().map_err(err)?;
    let fam = FiniteIdentityFamily::new(id, n, param_map(params)?, base(q)?).map_err(err)?;
    let step = cauchy::check_finite_identity(&fam).map_err(err)?;
    Ok(step.residual.to_string())
}

#[pymodule]
fn pyqbilateral(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QSeriesError", m.py().get_type::<QSeriesError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(poch, m)?)?;
    m.add_function(wrap_pyfunction!(eval_series, m)?)?;
    m.add_function(wrap_pyfunction!(eval_vwp, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(check_display, m)?)?;
    Ok(())
}
