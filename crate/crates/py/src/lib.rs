//! Python bindings. Validation errors raise `ValueError`; numerical failures
//! raise `RuntimeError`. Long computations release the GIL.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use static_pricing as core;
use static_pricing::{Atom, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidDistribution(_) | Error::InvalidInstance(_) | Error::InvalidBias(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::BracketNotFound { .. } | Error::NumericalDegradation { .. } | Error::Infeasible => {
            PyRuntimeError::new_err(e.to_string())
        }
    }
}

/// One buyer's value distribution.
#[pyclass(frozen, from_py_object, module = "static_pricing_py")]
#[derive(Clone)]
struct ValueDistribution(core::ValueDistribution);

#[pymethods]
impl ValueDistribution {
    #[staticmethod]
    fn point_mass(value: f64) -> PyResult<Self> {
        core::ValueDistribution::point_mass(value).map(Self).map_err(to_py)
    }

    /// `value` with probability `bias`, else 0.
    #[staticmethod]
    fn bernoulli(value: f64, bias: f64) -> PyResult<Self> {
        core::ValueDistribution::bernoulli(value, bias).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        core::ValueDistribution::uniform(lo, hi).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (rate, shift = 0.0))]
    fn exponential(rate: f64, shift: f64) -> PyResult<Self> {
        core::ValueDistribution::exponential(rate, shift).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn discrete(values: Vec<f64>, masses: Vec<f64>) -> PyResult<Self> {
        if values.len() != masses.len() {
            return Err(PyValueError::new_err("values and masses must have the same length"));
        }
        let support = values.into_iter().zip(masses).map(|(value, mass)| Atom { value, mass }).collect();
        core::ValueDistribution::discrete(support).map(Self).map_err(to_py)
    }

    /// Normal(mean, stddev) conditioned on `v >= 0`.
    #[staticmethod]
    fn truncated_normal(mean: f64, stddev: f64) -> PyResult<Self> {
        core::ValueDistribution::truncated_normal(mean, stddev).map(Self).map_err(to_py)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family()
    }

    /// `Pr[v >= p]`.
    fn tail(&self, p: f64) -> f64 {
        self.0.tail(p)
    }

    /// `Pr[v > p]`.
    fn strict_tail(&self, p: f64) -> f64 {
        self.0.strict_tail(p)
    }

    /// `Pr[v = p]`.
    fn atom(&self, p: f64) -> f64 {
        self.0.atom(p)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// `E[(v - p)^+]`.
    fn mean_above(&self, p: f64) -> f64 {
        self.0.mean_above(p)
    }

    fn quantile(&self, level: f64) -> f64 {
        self.0.quantile(level)
    }

    fn __repr__(&self) -> String {
        format!("ValueDistribution({})", self.0.family())
    }
}

/// `k` identical units and `n > k` independent buyers.
#[pyclass(frozen, skip_from_py_object, module = "static_pricing_py")]
#[derive(Clone)]
struct Instance(core::Instance);

#[pymethods]
impl Instance {
    #[new]
    #[pyo3(signature = (k, distributions, order = None))]
    fn new(k: usize, distributions: Vec<ValueDistribution>, order: Option<Vec<usize>>) -> PyResult<Self> {
        let inner = core::Instance::new(k, distributions.into_iter().map(|d| d.0).collect()).map_err(to_py)?;
        match order {
            Some(order) => inner.with_order(order).map(Self).map_err(to_py),
            None => Ok(Self(inner)),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::Instance::from_json_str(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn arrival_order(&self) -> Vec<usize> {
        self.0.arrival_order()
    }

    fn __repr__(&self) -> String {
        format!("Instance(k={}, n={})", self.0.k(), self.0.n())
    }
}

/// Equalizing price, tie-break probability and the resulting guarantee.
#[pyclass(frozen, skip_from_py_object, get_all, module = "static_pricing_py")]
#[derive(Clone)]
struct PricingResult {
    price: f64,
    tie_break: f64,
    delta: f64,
    mu: f64,
    guarantee: f64,
    effective_biases: Vec<f64>,
}

impl PricingResult {
    fn to_core(&self) -> PyResult<core::PricingResult> {
        Ok(core::PricingResult {
            price: self.price,
            tie_break: self.tie_break,
            delta: self.delta,
            mu: self.mu,
            guarantee: self.guarantee,
            effective_biases: core::BiasProfile::new(self.effective_biases.clone()).map_err(to_py)?,
        })
    }
}

impl From<core::PricingResult> for PricingResult {
    fn from(r: core::PricingResult) -> Self {
        Self {
            price: r.price,
            tie_break: r.tie_break,
            delta: r.delta,
            mu: r.mu,
            guarantee: r.guarantee,
            effective_biases: r.effective_biases.into_inner(),
        }
    }
}

#[pymethods]
impl PricingResult {
    fn __repr__(&self) -> String {
        format!(
            "PricingResult(price={}, tie_break={}, delta={}, mu={}, guarantee={})",
            self.price, self.tie_break, self.delta, self.mu, self.guarantee
        )
    }
}

/// `lambda_k`, `phi_k` and the adaptive baseline `alpha_k` for one `k`.
#[pyclass(frozen, get_all, module = "static_pricing_py")]
struct RatioPoint {
    k: usize,
    lambda_k: f64,
    phi_k: f64,
    alpha_k: f64,
    asymptotic_gap: Option<f64>,
}

impl From<core::RatioPoint> for RatioPoint {
    fn from(r: core::RatioPoint) -> Self {
        Self { k: r.k, lambda_k: r.lambda, phi_k: r.phi, alpha_k: r.alpha, asymptotic_gap: r.asymptotic_gap }
    }
}

#[pymethods]
impl RatioPoint {
    fn __repr__(&self) -> String {
        format!("RatioPoint(k={}, lambda_k={}, phi_k={}, alpha_k={})", self.k, self.lambda_k, self.phi_k, self.alpha_k)
    }
}

/// Monte Carlo estimates for one arrival order.
#[pyclass(frozen, get_all, module = "static_pricing_py")]
struct SimulationReport {
    trials: u64,
    seed: u64,
    price: f64,
    tie_break: f64,
    order: Vec<usize>,
    welfare_mean: f64,
    revenue_mean: f64,
    utility_mean: f64,
    opt_mean: f64,
    ratio: f64,
    welfare_std_error: f64,
    revenue_std_error: f64,
    utility_std_error: f64,
    opt_std_error: f64,
    ratio_std_error: f64,
    sellout_rate: f64,
}

impl From<core::SimulationReport> for SimulationReport {
    fn from(r: core::SimulationReport) -> Self {
        Self {
            trials: r.trials,
            seed: r.seed,
            price: r.price,
            tie_break: r.tie_break,
            order: r.order,
            welfare_mean: r.welfare_mean,
            revenue_mean: r.revenue_mean,
            utility_mean: r.utility_mean,
            opt_mean: r.opt_mean,
            ratio: r.ratio,
            welfare_std_error: r.welfare_std_error,
            revenue_std_error: r.revenue_std_error,
            utility_std_error: r.utility_std_error,
            opt_std_error: r.opt_std_error,
            ratio_std_error: r.ratio_std_error,
            sellout_rate: r.sellout_rate,
        }
    }
}

#[pymethods]
impl SimulationReport {
    fn __repr__(&self) -> String {
        format!("SimulationReport(trials={}, ratio={} +- {})", self.trials, self.ratio, self.ratio_std_error)
    }
}

/// Smallest ratio found over Bernoulli bias profiles at `(n, k)`.
#[pyclass(frozen, get_all, module = "static_pricing_py")]
struct SearchResult {
    n: usize,
    k: usize,
    restarts: usize,
    seed: u64,
    best_biases: Vec<f64>,
    best_phi: f64,
    equal_bias: f64,
    equal_bias_phi: f64,
    gap: f64,
}

impl From<core::SearchResult> for SearchResult {
    fn from(r: core::SearchResult) -> Self {
        Self {
            n: r.n,
            k: r.k,
            restarts: r.restarts,
            seed: r.seed,
            best_biases: r.best_biases.into_inner(),
            best_phi: r.best_phi,
            equal_bias: r.equal_bias,
            equal_bias_phi: r.equal_bias_phi,
            gap: r.gap,
        }
    }
}

#[pymethods]
impl SearchResult {
    fn __repr__(&self) -> String {
        format!("SearchResult(n={}, k={}, best_phi={}, gap={})", self.n, self.k, self.best_phi, self.gap)
    }
}

fn parse_order(name: &str, seed: u64) -> PyResult<core::ArrivalOrder> {
    use core::ArrivalOrder::*;
    Ok(match name {
        "given" => Given,
        "reverse" => Reverse,
        "random" => Random { seed },
        "desc" => MeanDescending,
        "asc" => MeanAscending,
        _ => return Err(PyValueError::new_err(format!("unknown order {name:?}"))),
    })
}

/// Equalizing static price of an instance.
#[pyfunction]
fn solve_static_price(py: Python<'_>, instance: &Instance) -> PyResult<PricingResult> {
    let inner = &instance.0;
    py.detach(|| core::solve_static_price(inner)).map(Into::into).map_err(to_py)
}

/// `(delta_k, mu_k)` at price `p` with tie-break probability `q`.
#[pyfunction]
#[pyo3(signature = (instance, p, q = 1.0))]
fn evaluate_price(instance: &Instance, p: f64, q: f64) -> PyResult<(f64, f64)> {
    core::evaluate_price(&instance.0, p, q).map_err(to_py)
}

#[pyfunction]
fn solve_poisson_rate(k: usize) -> PyResult<RatioPoint> {
    if k < 1 {
        return Err(PyValueError::new_err("k must be at least 1"));
    }
    Ok(core::solve_poisson_rate(k).into())
}

#[pyfunction]
fn alaei_ratio(k: usize) -> f64 {
    core::alaei_ratio(k)
}

#[pyfunction]
fn ratio_table(py: Python<'_>, k_min: usize, k_max: usize) -> PyResult<Vec<RatioPoint>> {
    if k_min < 1 || k_max < k_min {
        return Err(PyValueError::new_err("need 1 <= k_min <= k_max"));
    }
    Ok(py.detach(|| core::ratio_table(k_min, k_max)).into_iter().map(Into::into).collect())
}

/// Simulate the sale at `pricing` for `trials` independent value draws.
#[pyfunction]
#[pyo3(signature = (instance, pricing, trials = 100_000, seed = 0, order = "given"))]
fn estimate(
    py: Python<'_>,
    instance: &Instance,
    pricing: &PricingResult,
    trials: u64,
    seed: u64,
    order: &str,
) -> PyResult<SimulationReport> {
    if trials == 0 {
        return Err(PyValueError::new_err("trials must be at least 1"));
    }
    let pricing = pricing.to_core()?;
    let arrival = parse_order(order, seed)?.resolve(&instance.0);
    let inner = &instance.0;
    let report = py.detach(|| {
        core::simulator::estimate_orders(inner, &pricing, &[arrival], trials, seed).remove(0)
    });
    Ok(report.into())
}

/// `(b, phi)` for `n` buyers with a common bias `b` equalizing delta and mu.
#[pyfunction]
fn equal_bias_phi(n: usize, k: usize) -> PyResult<(f64, f64)> {
    core::equal_bias_phi(n, k).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, k, restarts = 50, seed = 0))]
fn search_min_phi(py: Python<'_>, n: usize, k: usize, restarts: usize, seed: u64) -> PyResult<SearchResult> {
    py.detach(|| core::search_min_phi(n, k, restarts, seed)).map(Into::into).map_err(to_py)
}

#[pymodule]
fn static_pricing_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ValueDistribution>()?;
    m.add_class::<Instance>()?;
    m.add_class::<PricingResult>()?;
    m.add_class::<RatioPoint>()?;
    m.add_class::<SimulationReport>()?;
    m.add_class::<SearchResult>()?;
    m.add_function(wrap_pyfunction!(solve_static_price, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_price, m)?)?;
    m.add_function(wrap_pyfunction!(solve_poisson_rate, m)?)?;
    m.add_function(wrap_pyfunction!(alaei_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_table, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(equal_bias_phi, m)?)?;
    m.add_function(wrap_pyfunction!(search_min_phi, m)?)?;
    Ok(())
}
