//! Python bindings: `import simpell`.

use std::path::PathBuf;
use std::time::Duration;

use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use simpell::arith::{self, FactorBudget};
use simpell::quadfield::{self, QuadElem as CoreQuad};
use simpell::realcf::PrecisionPolicy;
use simpell::report::{render_text, Record};
use simpell::sweep::{run_sweep, SweepOptions};
use simpell::verifier::{self, VerifyConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(
    precision_bits: u32,
    precision_ceiling_bits: u32,
    factor_budget_ms: u64,
    scan_cap: u64,
    seed: u64,
) -> PyResult<VerifyConfig> {
    if precision_bits < 32 {
        return Err(PyValueError::new_err("precision_bits must be at least 32"));
    }
    Ok(VerifyConfig {
        policy: PrecisionPolicy {
            initial_bits: precision_bits,
            ceiling_bits: precision_ceiling_bits.max(precision_bits),
        },
        factor_budget: FactorBudget {
            time_limit: Some(Duration::from_millis(factor_budget_ms)),
            seed,
            ..FactorBudget::default()
        },
        scan_cap,
    })
}

/// `(u + v*sqrt(d)) / denom` in the ring of integers of Q(sqrt(d)).
#[pyclass(name = "QuadElem", module = "simpell", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyQuadElem(CoreQuad);

#[pymethods]
impl PyQuadElem {
    #[new]
    #[pyo3(signature = (u, v, radicand, denom = 1))]
    fn new(u: BigInt, v: BigInt, radicand: u64, denom: u32) -> PyResult<Self> {
        CoreQuad::new(u, v, denom, radicand).map(Self).map_err(value_err)
    }

    #[getter]
    fn u(&self) -> BigInt {
        self.0.u().clone()
    }

    #[getter]
    fn v(&self) -> BigInt {
        self.0.v().clone()
    }

    #[getter]
    fn denom(&self) -> u32 {
        self.0.denom()
    }

    /// Square-free radicand.
    #[getter]
    fn radicand(&self) -> u64 {
        self.0.radicand()
    }

    fn norm(&self) -> BigInt {
        self.0.norm()
    }

    fn trace(&self) -> BigInt {
        self.0.trace()
    }

    fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.0.mul(&other.0).map(Self).map_err(value_err)
    }

    fn __pow__(&self, n: u64, _modulo: Option<u64>) -> Self {
        Self(self.0.pow(n))
    }

    /// `(U, V, D)` with `self = (U + V*sqrt(b)) / D` in lowest terms.
    fn coords_over(&self, b: u64) -> (BigInt, BigInt, BigInt) {
        self.0.coords_over(b)
    }

    fn __repr__(&self) -> String {
        format!("QuadElem({})", self.0)
    }
}

/// Outcome of `verify`.
#[pyclass(name = "Report", module = "simpell", frozen)]
struct PyReport {
    record: Record,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn b(&self) -> u64 {
        self.record.b
    }

    /// "unique_certified", "pairs_found" or "not_certified".
    #[getter]
    fn status(&self) -> &str {
        &self.record.status
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        self.record.reason.clone()
    }

    #[getter]
    fn epsilon(&self) -> PyResult<Option<PyQuadElem>> {
        self.record
            .epsilon
            .as_ref()
            .map(|e| {
                let u: BigInt = e.u.parse().map_err(value_err)?;
                let v: BigInt = e.v.parse().map_err(value_err)?;
                CoreQuad::new(u, v, e.denom, e.radicand).map(PyQuadElem).map_err(value_err)
            })
            .transpose()
    }

    /// `x_n` of every candidate that passed the filters.
    #[getter]
    fn kept_x(&self) -> PyResult<Vec<BigUint>> {
        self.record
            .candidates
            .iter()
            .filter(|c| c.skipped.is_none())
            .filter_map(|c| c.x.as_ref())
            .map(|x| x.parse().map_err(value_err))
            .collect()
    }

    /// `(x, x')` for every pair found.
    #[getter]
    fn pairs(&self) -> PyResult<Vec<(BigUint, BigUint)>> {
        self.record
            .pairs
            .iter()
            .map(|p| Ok((p.x.parse().map_err(value_err)?, p.x_prime.parse().map_err(value_err)?)))
            .collect()
    }

    fn to_json(&self) -> String {
        self.record.to_json_line()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.record.to_json_line(),))
    }

    fn text(&self) -> String {
        render_text(&self.record)
    }

    fn __repr__(&self) -> String {
        format!("Report(b={}, status={:?})", self.record.b, self.record.status)
    }
}

/// Runs the full certification for one `b`.
#[pyfunction]
#[pyo3(signature = (b, *, precision_bits = 192, precision_ceiling_bits = 32768, factor_budget_ms = 5000, scan_cap = 10_000_000, seed = 0))]
fn verify(
    py: Python<'_>,
    b: u64,
    precision_bits: u32,
    precision_ceiling_bits: u32,
    factor_budget_ms: u64,
    scan_cap: u64,
    seed: u64,
) -> PyResult<PyReport> {
    if b == 0 {
        return Err(PyValueError::new_err("b must be positive"));
    }
    let cfg = config(precision_bits, precision_ceiling_bits, factor_budget_ms, scan_cap, seed)?;
    let record = py.detach(|| Record::from_report(&verifier::verify_b(b, &cfg)));
    Ok(PyReport { record })
}

/// Verifies `from_..=to` into a JSONL file; returns the summary as a dict.
#[pyfunction]
#[pyo3(signature = (from_, to, out, *, jobs = 0, checkpoint = None, precision_bits = 192, precision_ceiling_bits = 32768, factor_budget_ms = 5000, scan_cap = 10_000_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    from_: u64,
    to: u64,
    out: PathBuf,
    jobs: usize,
    checkpoint: Option<PathBuf>,
    precision_bits: u32,
    precision_ceiling_bits: u32,
    factor_budget_ms: u64,
    scan_cap: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(precision_bits, precision_ceiling_bits, factor_budget_ms, scan_cap, seed)?;
    let opts = SweepOptions { from: from_, to, jobs, out, checkpoint, config: cfg };
    let s = py
        .detach(|| run_sweep(&opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let d = PyDict::new(py);
    d.set_item("records", s.records)?;
    d.set_item("computed", s.computed)?;
    d.set_item("status_counts", s.status_counts.clone())?;
    d.set_item("total_ms", s.total_ms)?;
    d.set_item("mean_ms", s.mean_ms)?;
    d.set_item("max_ms", s.max_ms)?;
    d.set_item("max_b", s.max_b)?;
    d.set_item("exit_code", s.exit_code())?;
    d.set_item("line", s.line())?;
    Ok(d)
}

/// Fundamental unit of Q(sqrt(b)).
#[pyfunction]
fn fundamental_unit(b: u64) -> PyResult<PyQuadElem> {
    quadfield::fundamental_unit(b).map(PyQuadElem).map_err(value_err)
}

/// Minimal `(z, x)` with `z^2 - b x^2 = 1`.
#[pyfunction]
fn pell_fundamental_solution(b: u64) -> PyResult<(BigInt, BigInt)> {
    let p = quadfield::pell_fundamental_solution(b).map_err(value_err)?;
    Ok((p.z1, p.x1))
}

/// `x_n` from the n-th power of the fundamental unit, or None if not integral.
#[pyfunction]
fn candidate_x(b: u64, n: u64) -> PyResult<Option<BigInt>> {
    let eps = quadfield::fundamental_unit(b).map_err(value_err)?;
    Ok(quadfield::candidate_x(&eps, b, n))
}

/// All `(z, x)` with `z^2 - b x^2 = 1`, `x <= x_max`, by direct scan.
#[pyfunction]
fn brute_force_oracle(py: Python<'_>, b: u64, x_max: u64) -> Vec<(BigUint, BigUint)> {
    py.detach(|| verifier::brute_force_oracle(b, x_max))
}

#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn is_prime(n: BigUint, seed: u64) -> bool {
    arith::is_prime(&n, seed)
}

/// `(factors, cofactor)`; cofactor is 1 when the factorization is complete.
#[pyfunction]
#[pyo3(signature = (n, budget_ms = 5000, seed = 0))]
fn factorize(py: Python<'_>, n: BigUint, budget_ms: u64, seed: u64) -> (Vec<(BigUint, u32)>, BigUint) {
    let budget = FactorBudget { seed, ..FactorBudget::with_time_ms(budget_ms) };
    let f = py.detach(|| arith::factorize(&n, &budget));
    (f.factors, f.cofactor)
}

#[pymodule]
#[pyo3(name = "simpell")]
fn simpell_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadElem>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_unit, m)?)?;
    m.add_function(wrap_pyfunction!(pell_fundamental_solution, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_x, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
