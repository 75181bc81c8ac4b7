//! Python bindings: states, channels, entropies, overlaps, key rates,
//! protocol simulation and the purified-encoding check.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twoway_core::channels::{self, PauliLabel};
use twoway_core::entropy::{self, Distribution};
use twoway_core::keyrates::{self, Protocol, ScenarioKind};
use twoway_core::linalg::{self, ComplexMatrix};
use twoway_core::measurement;
use twoway_core::protocols::{
    self, ChannelModel, ErrorRates, Lm05Config, Lm05Version, Reconciliation, SdcConfig,
};
use twoway_core::purification::{self, EncodingFamily};
use twoway_core::QkdError;

fn err(e: QkdError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    ComplexMatrix::from_vec(n, m, rows.into_iter().flatten().collect()).map_err(err)
}

fn to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

#[pyclass(name = "DensityOperator", from_py_object)]
#[derive(Clone)]
struct PyDensityOperator(linalg::DensityOperator);

#[pymethods]
impl PyDensityOperator {
    #[new]
    fn new(dims: Vec<usize>, matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self(linalg::DensityOperator::new(dims, to_matrix(matrix)?).map_err(err)?))
    }

    #[staticmethod]
    fn maximally_mixed(d: usize) -> Self {
        Self(linalg::DensityOperator::maximally_mixed(d))
    }

    /// `|ψ⁺⟩⟨ψ⁺|` with `|ψ⁺⟩ = (|00⟩ + |11⟩)/√2`.
    #[staticmethod]
    fn psi_plus() -> Self {
        Self(linalg::PureState::psi_plus().density())
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.0.matrix())
    }

    fn tensor(&self, other: &Self) -> Self {
        Self(self.0.tensor(&other.0))
    }

    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<Self> {
        Ok(Self(self.0.partial_trace(&keep).map_err(err)?))
    }

    fn von_neumann(&self) -> PyResult<f64> {
        entropy::von_neumann(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityOperator(dims={:?})", self.0.dims())
    }
}

#[pyclass(name = "QuantumChannel", from_py_object)]
#[derive(Clone)]
struct PyQuantumChannel(channels::QuantumChannel);

#[pymethods]
impl PyQuantumChannel {
    #[new]
    fn new(dim_in: usize, dim_out: usize, kraus: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let kraus = kraus.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self(channels::QuantumChannel::new(dim_in, dim_out, kraus).map_err(err)?))
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Self(channels::QuantumChannel::identity(d))
    }

    #[staticmethod]
    fn depolarizing(q: f64, d: usize) -> PyResult<Self> {
        Ok(Self(channels::depolarizing(q, d).map_err(err)?))
    }

    /// Conjugation by `1`, `X`, `Y` or `Z`.
    #[staticmethod]
    fn pauli(label: &str) -> PyResult<Self> {
        let p = match label {
            "1" | "I" => PauliLabel::I,
            "X" => PauliLabel::X,
            "Y" => PauliLabel::Y,
            "Z" => PauliLabel::Z,
            other => return Err(PyValueError::new_err(format!("unknown Pauli {other:?}"))),
        };
        Ok(Self(channels::QuantumChannel::unitary(p.matrix()).map_err(err)?))
    }

    #[getter]
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }

    #[getter]
    fn dim_out(&self) -> usize {
        self.0.dim_out()
    }

    fn kraus(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.kraus().iter().map(to_rows).collect()
    }

    fn apply(&self, rho: &PyDensityOperator) -> PyResult<PyDensityOperator> {
        Ok(PyDensityOperator(self.0.apply(&rho.0).map_err(err)?))
    }

    fn choi(&self) -> Vec<Vec<Complex64>> {
        to_rows(channels::kraus_to_choi(&self.0).matrix())
    }

    /// `other ∘ self`
    fn then(&self, other: &Self) -> PyResult<Self> {
        Ok(Self(channels::compose(&self.0, &other.0).map_err(err)?))
    }
}

#[pyclass(name = "Povm", from_py_object)]
#[derive(Clone)]
struct PyPovm(measurement::Povm);

#[pymethods]
impl PyPovm {
    #[new]
    fn new(elements: Vec<Vec<Vec<Complex64>>>, labels: Vec<String>) -> PyResult<Self> {
        let elements = elements.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self(measurement::Povm::new(elements, labels).map_err(err)?))
    }

    /// One of `z`, `x`, `bell`, `z_tensor_x`, `zz_xor`, `x_first`, `x_second`.
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        let povm = match name {
            "z" => measurement::z_basis(),
            "x" => measurement::x_basis(),
            "bell" => measurement::bell_basis(),
            "z_tensor_x" => measurement::z_tensor_x(),
            "zz_xor" => measurement::zz_xor(),
            "x_first" => measurement::x_on_qubit(0).map_err(err)?,
            "x_second" => measurement::x_on_qubit(1).map_err(err)?,
            other => return Err(PyValueError::new_err(format!("unknown measurement {other:?}"))),
        };
        Ok(Self(povm))
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    fn probabilities(&self, rho: &PyDensityOperator) -> PyResult<Vec<f64>> {
        self.0.probabilities(&rho.0).map_err(err)
    }
}

#[pyfunction]
fn shannon(probabilities: Vec<f64>) -> PyResult<f64> {
    Ok(entropy::shannon(&Distribution::new(probabilities).map_err(err)?))
}

#[pyfunction]
fn binary_entropy(q: f64) -> PyResult<f64> {
    entropy::binary_entropy(q).map_err(err)
}

#[pyfunction]
fn conditional_vn(rho: &PyDensityOperator, condition_on: Vec<usize>) -> PyResult<f64> {
    entropy::conditional_vn(&rho.0, &condition_on).map_err(err)
}

#[pyfunction]
fn overlap(f: &PyPovm, g: &PyPovm) -> PyResult<f64> {
    measurement::overlap(&f.0, &g.0).map_err(err)
}

#[pyfunction]
fn effective_overlap_bound(beta: f64) -> PyResult<f64> {
    measurement::effective_overlap_bound(beta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dims, trials = 500, seed = 0))]
fn uncertainty_sweep(py: Python<'_>, dims: [usize; 3], trials: usize, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    let s = measurement::uncertainty_sweep(dims, trials, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("trials", s.trials)?;
    d.set_item("min_slack", s.min_slack)?;
    d.set_item("mean_slack", s.mean_slack)?;
    Ok(d)
}

#[pyfunction]
fn sdc_rate(q_g: Vec<f64>, q_f: Vec<f64>) -> PyResult<f64> {
    let q_g = Distribution::new(q_g).map_err(err)?;
    let q_f = Distribution::new(q_f).map_err(err)?;
    keyrates::sdc_rate(&q_g, &q_f).map_err(err)
}

#[pyfunction]
fn lm05_rate(q_g0: f64, q_g1: f64, q_f: f64) -> PyResult<f64> {
    keyrates::lm05_rate(q_g0, q_g1, q_f).map_err(err)
}

#[pyfunction]
fn bb84_pair_rate(q: f64) -> PyResult<f64> {
    keyrates::bb84_pair_rate(q).map_err(err)
}

#[pyfunction]
fn plugplay_rate(q_round_trip: f64) -> PyResult<f64> {
    keyrates::plugplay_rate(q_round_trip).map_err(err)
}

#[pyfunction]
fn threshold(protocol: &str, scenario: &str) -> PyResult<f64> {
    let p: Protocol = protocol.parse().map_err(err)?;
    let s: ScenarioKind = scenario.parse().map_err(err)?;
    keyrates::threshold(p, s).map_err(err)
}

/// Rows of `(protocol, q/2, rate)` in grid-major order.
#[pyfunction]
fn sweep(protocols: Vec<String>, scenario: &str, q_half_grid: Vec<f64>) -> PyResult<Vec<(String, f64, f64)>> {
    let protocols = protocols
        .iter()
        .map(|p| p.parse::<Protocol>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let s: ScenarioKind = scenario.parse().map_err(err)?;
    Ok(keyrates::sweep(&protocols, s, &q_half_grid)
        .map_err(err)?
        .into_iter()
        .map(|p| (p.protocol.label().to_string(), p.error_rate, p.rate))
        .collect())
}

fn channel_model(channel: &str, q: f64) -> PyResult<ChannelModel> {
    match channel {
        "noiseless" => Ok(ChannelModel::Noiseless),
        "independent" => Ok(ChannelModel::Independent(q)),
        "correlated" => Ok(ChannelModel::Correlated(q)),
        other => Err(PyValueError::new_err(format!("unknown channel {other:?}"))),
    }
}

fn rates_dict<'py>(
    py: Python<'py>,
    t: &protocols::ProtocolTranscript,
    est_fraction: f64,
    protocol: Protocol,
) -> PyResult<Bound<'py, PyDict>> {
    let rates = protocols::estimate_errors(t, est_fraction).map_err(err)?;
    let summary = t.summary();
    let d = PyDict::new(py);
    d.set_item("signals", summary.n_signals)?;
    d.set_item("key_signals", summary.key)?;
    d.set_item("estimation_signals", summary.estimation)?;
    d.set_item("unusable_signals", summary.unusable)?;
    match &rates {
        ErrorRates::Sdc { q_f, q_g, .. } => {
            d.set_item("q_f", q_f.probabilities().to_vec())?;
            d.set_item("q_g", q_g.probabilities().to_vec())?;
        }
        ErrorRates::Lm05 { q_f, q_g0, q_g1, .. } => {
            d.set_item("q_f", *q_f)?;
            d.set_item("q_g0", *q_g0)?;
            d.set_item("q_g1", *q_g1)?;
        }
        ErrorRates::OneWay { q } => d.set_item("q", *q)?,
    }
    d.set_item("key_rate", protocol.rate(&rates).map_err(err)?)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (signals, channel = "noiseless", q = 0.0, c = protocols::DEFAULT_ENCODE_PROB, seed = 0, est_fraction = protocols::DEFAULT_EST_FRACTION))]
fn simulate_sdc<'py>(
    py: Python<'py>,
    signals: usize,
    channel: &str,
    q: f64,
    c: f64,
    seed: u64,
    est_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = SdcConfig::new(signals, channel_model(channel, q)?, seed);
    cfg.encode_prob = c;
    let t = py.detach(|| protocols::run_sdc(&cfg)).map_err(err)?;
    rates_dict(py, &t, est_fraction, Protocol::Sdc)
}

#[pyfunction]
#[pyo3(signature = (signals, version = 1, reconciliation = "reverse", channel = "noiseless", q = 0.0, c = protocols::DEFAULT_ENCODE_PROB, p = None, seed = 0, est_fraction = protocols::DEFAULT_EST_FRACTION))]
#[allow(clippy::too_many_arguments)]
fn simulate_lm05<'py>(
    py: Python<'py>,
    signals: usize,
    version: u8,
    reconciliation: &str,
    channel: &str,
    q: f64,
    c: f64,
    p: Option<f64>,
    seed: u64,
    est_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let version = match version {
        1 => Lm05Version::V1,
        2 => Lm05Version::V2,
        v => return Err(PyValueError::new_err(format!("unknown version {v}"))),
    };
    let reconciliation: Reconciliation = reconciliation.parse().map_err(err)?;
    let mut cfg = Lm05Config::new(signals, version, reconciliation, channel_model(channel, q)?, seed);
    cfg.encode_prob = c;
    if let Some(p) = p {
        cfg.z_basis_prob = p;
    }
    let t = py.detach(|| protocols::run_lm05(&cfg)).map_err(err)?;
    rates_dict(py, &t, est_fraction, Protocol::Lm05)
}

#[pyclass(name = "EncodingPurification")]
struct PyEncodingPurification(purification::EncodingPurification);

#[pymethods]
impl PyEncodingPurification {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    fn povm(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.povm.iter().map(to_rows).collect()
    }

    fn phi(&self) -> Vec<Complex64> {
        self.0.phi_cd.amplitudes().to_vec()
    }

    fn sigma_d(&self) -> PyDensityOperator {
        PyDensityOperator(self.0.sigma_d.clone())
    }

    /// `n Tr_AC(F^i (ρ_A ⊗ |φ⟩⟨φ|))`
    fn simulate(&self, i: usize, rho: &PyDensityOperator) -> PyResult<Vec<Vec<Complex64>>> {
        if i >= self.0.n {
            return Err(PyValueError::new_err(format!("outcome {i} out of range")));
        }
        Ok(to_rows(&self.0.simulate(i, rho.0.matrix()).map_err(err)?))
    }
}

#[pyfunction]
fn purify_encoding(maps: Vec<PyQuantumChannel>) -> PyResult<PyEncodingPurification> {
    let maps: Vec<_> = maps.into_iter().map(|m| m.0).collect();
    Ok(PyEncodingPurification(purification::purify_encoding(&maps).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (p, maps, trials = 100, tol = 1e-10, seed = 0))]
fn verify_purification<'py>(
    py: Python<'py>,
    p: &PyEncodingPurification,
    maps: Vec<PyQuantumChannel>,
    trials: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let maps: Vec<_> = maps.into_iter().map(|m| m.0).collect();
    let r = purification::verify_purification(&p.0, &maps, trials, tol, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed)?;
    d.set_item("max_deviation", r.max_deviation)?;
    d.set_item("completeness_error", r.completeness_error)?;
    d.set_item("min_eigenvalue", r.min_eigenvalue)?;
    d.set_item("marginal_error", r.marginal_error)?;
    d.set_item("inputs_checked", r.inputs_checked)?;
    d.set_item("sampler", r.sampler)?;
    Ok(d)
}

/// Encoding maps of a named family: `pauli`, `constant`, `rank_deficient`, `rotated_pauli`.
#[pyfunction]
#[pyo3(signature = (name, seed = 0))]
fn encoding_family(name: &str, seed: u64) -> PyResult<Vec<PyQuantumChannel>> {
    let family = match name {
        "pauli" => EncodingFamily::Pauli,
        "constant" => EncodingFamily::Constant,
        "rank_deficient" => EncodingFamily::RankDeficient,
        "rotated_pauli" => EncodingFamily::RotatedPauli { seed },
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    };
    Ok(family.maps().map_err(err)?.into_iter().map(PyQuantumChannel).collect())
}

#[pymodule]
fn twoway_qkd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityOperator>()?;
    m.add_class::<PyQuantumChannel>()?;
    m.add_class::<PyPovm>()?;
    m.add_class::<PyEncodingPurification>()?;
    m.add_function(wrap_pyfunction!(shannon, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_vn, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(effective_overlap_bound, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sdc_rate, m)?)?;
    m.add_function(wrap_pyfunction!(lm05_rate, m)?)?;
    m.add_function(wrap_pyfunction!(bb84_pair_rate, m)?)?;
    m.add_function(wrap_pyfunction!(plugplay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sdc, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lm05, m)?)?;
    m.add_function(wrap_pyfunction!(purify_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(verify_purification, m)?)?;
    m.add_function(wrap_pyfunction!(encoding_family, m)?)?;
    Ok(())
}
