//! Python bindings: modem primitives, analytic performance and sweeps.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lora_relay_core::lora_phy::{self, SymbolIndex};
use lora_relay_core::montecarlo::{self, EstimateResult};
use lora_relay_core::perf_analysis::{self as pa, SystemKind, ThroughputParams};
use lora_relay_core::{scenario, sweeps, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Convergence(m) => PyArithmeticError::new_err(m),
        Error::Config(m) | Error::Domain(m) => PyValueError::new_err(m),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for lora_relay_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "ModemConfig", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyModemConfig(lora_phy::ModemConfig);

#[pymethods]
impl PyModemConfig {
    #[new]
    #[pyo3(signature = (sf, bandwidth_hz = 125e3))]
    fn new(sf: u32, bandwidth_hz: f64) -> PyResult<Self> {
        lora_phy::ModemConfig::new(sf, bandwidth_hz).py().map(Self)
    }

    #[getter]
    fn sf(&self) -> u32 {
        self.0.sf()
    }

    #[getter]
    fn bandwidth_hz(&self) -> f64 {
        self.0.bandwidth_hz()
    }

    #[getter]
    fn samples_per_symbol(&self) -> usize {
        self.0.samples_per_symbol()
    }

    #[getter]
    fn symbol_duration_s(&self) -> f64 {
        self.0.symbol_duration_s()
    }

    /// Unit-energy waveform of symbol `m`.
    fn modulate(&self, m: u32) -> PyResult<Vec<Complex64>> {
        let sym = SymbolIndex::new(m, &self.0).py()?;
        Ok(lora_phy::modulate(sym, &self.0))
    }

    /// Detected symbol and the bin magnitudes.
    fn detect(&self, samples: Vec<Complex64>) -> PyResult<(u32, Vec<f64>)> {
        let d = lora_phy::detect(&samples, &self.0).py()?;
        Ok((d.symbol.value(), d.magnitudes))
    }

    fn __repr__(&self) -> String {
        format!("ModemConfig(sf={}, bandwidth_hz={})", self.0.sf(), self.0.bandwidth_hz())
    }
}

#[pyclass(name = "BranchParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBranchParams(pa::BranchParams);

#[pymethods]
impl PyBranchParams {
    #[new]
    fn new(m_sr: f64, m_rd: f64, gbar_sr: f64, gbar_rd: f64) -> PyResult<Self> {
        pa::BranchParams::new(m_sr, m_rd, gbar_sr, gbar_rd).py().map(Self)
    }

    #[getter]
    fn m_sr(&self) -> f64 {
        self.0.m_sr
    }

    #[getter]
    fn m_rd(&self) -> f64 {
        self.0.m_rd
    }

    #[getter]
    fn gbar_sr(&self) -> f64 {
        self.0.gbar_sr
    }

    #[getter]
    fn gbar_rd(&self) -> f64 {
        self.0.gbar_rd
    }

    fn cdf(&self, r: f64) -> PyResult<f64> {
        pa::branch_cdf_exact(r, &self.0).py()
    }

    fn __repr__(&self) -> String {
        let p = self.0;
        format!("BranchParams(m_sr={}, m_rd={}, gbar_sr={}, gbar_rd={})", p.m_sr, p.m_rd, p.gbar_sr, p.gbar_rd)
    }
}

fn unwrap_branches(branches: Vec<PyBranchParams>) -> Vec<pa::BranchParams> {
    branches.into_iter().map(|b| b.0).collect()
}

#[pyfunction]
fn conditional_ber(gamma: f64, sf: u32) -> PyResult<f64> {
    pa::conditional_ber(gamma, sf).py()
}

#[pyfunction]
fn analytical_ber(branches: Vec<PyBranchParams>, sf: u32) -> PyResult<f64> {
    pa::analytical_ber(&unwrap_branches(branches), sf).py()
}

#[pyfunction]
fn asymptotic_ber(branches: Vec<PyBranchParams>, sf: u32) -> PyResult<f64> {
    pa::asymptotic_ber(&unwrap_branches(branches), sf).py().map(|a| a.value)
}

#[pyfunction]
fn diversity_order(branches: Vec<PyBranchParams>) -> PyResult<f64> {
    pa::diversity_order(&unwrap_branches(branches)).py()
}

#[pyfunction]
fn single_link_ber(m: f64, gbar: f64, sf: u32) -> PyResult<f64> {
    pa::single_link_ber(m, gbar, sf).py()
}

#[pyfunction]
fn max_cdf(r: f64, branches: Vec<PyBranchParams>) -> PyResult<f64> {
    pa::max_cdf(r, &unwrap_branches(branches)).py()
}

#[pyfunction]
fn max_pdf(r: f64, branches: Vec<PyBranchParams>) -> PyResult<f64> {
    pa::max_pdf(r, &unwrap_branches(branches)).py()
}

#[pyfunction]
fn coverage_probability(psi: f64, branches: Vec<PyBranchParams>) -> PyResult<f64> {
    pa::coverage_probability(psi, &unwrap_branches(branches)).py()
}

/// Throughput in bits/s; `relay` selects the two-period relayed system.
#[pyfunction]
#[pyo3(signature = (pb, packet_symbols, modem, relay = false))]
fn throughput(pb: f64, packet_symbols: u32, modem: PyModemConfig, relay: bool) -> PyResult<f64> {
    let kind = if relay { SystemKind::Relay } else { SystemKind::Conventional };
    let params = ThroughputParams::new(packet_symbols, &modem.0, kind).py()?;
    pa::throughput(pb, &params).py()
}

fn estimate_dict<'py>(py: Python<'py>, e: &EstimateResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("point_estimate", e.point_estimate)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("ci95_low", e.ci95_low)?;
    d.set_item("ci95_high", e.ci95_high)?;
    d.set_item("trials", e.trials)?;
    d.set_item("errors_observed", e.errors_observed)?;
    d.set_item("seed", e.seed)?;
    Ok(d)
}

/// Relay scenario as read from a `key = value` file.
#[pyclass(name = "Scenario", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario(scenario::Scenario);

#[pymethods]
impl PyScenario {
    /// Defaults, optionally overridden by scenario-file text.
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        match text {
            Some(t) => scenario::Scenario::parse(t).py().map(Self),
            None => Ok(Self(scenario::Scenario::default())),
        }
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        scenario::Scenario::from_file(&path).py().map(Self)
    }

    #[getter]
    fn n_relays(&self) -> usize {
        self.0.n_relays()
    }

    #[getter]
    fn sf(&self) -> u32 {
        self.0.sf
    }

    fn with_relays(&self, n: usize) -> PyResult<Self> {
        self.0.with_relays(n).py().map(Self)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    /// Average SNR parameters of every branch at `ptn0_db`.
    fn branches(&self, ptn0_db: f64) -> PyResult<Vec<PyBranchParams>> {
        let b = self.0.with_ptn0_db(ptn0_db).py()?.topology().py()?.branch_params().py()?;
        Ok(b.into_iter().map(PyBranchParams).collect())
    }

    #[pyo3(signature = (snr_db, trials, seed = 0, waveform = false))]
    fn estimate_ber<'py>(
        &self,
        py: Python<'py>,
        snr_db: f64,
        trials: u64,
        seed: u64,
        waveform: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut s = self.0.clone();
        if waveform {
            s.mode = montecarlo::SimMode::Waveform;
        }
        let sim = s.sim_scenario().py()?;
        let e = py.detach(|| montecarlo::estimate_ber(&sim, snr_db, trials, seed)).py()?;
        estimate_dict(py, &e)
    }

    #[pyo3(signature = (psi_db, trials, seed = 0))]
    fn estimate_coverage<'py>(
        &self,
        py: Python<'py>,
        psi_db: f64,
        trials: u64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let sim = self.0.sim_scenario().py()?;
        let e = py.detach(|| montecarlo::estimate_coverage(&sim, psi_db, trials, seed)).py()?;
        estimate_dict(py, &e)
    }

    #[pyo3(signature = (snr_db, trials, seed = 0, shards = 1))]
    fn ber_sweep_csv(&self, py: Python<'_>, snr_db: Vec<f64>, trials: u64, seed: u64, shards: usize) -> PyResult<String> {
        py.detach(|| sweeps::ber_sweep_csv(&self.0, &snr_db, trials, seed, shards)).py()
    }

    #[pyo3(signature = (psi_db, trials, seed = 0, ptn0_db = None, shards = 1))]
    fn coverage_csv(
        &self,
        py: Python<'_>,
        psi_db: Vec<f64>,
        trials: u64,
        seed: u64,
        ptn0_db: Option<f64>,
        shards: usize,
    ) -> PyResult<String> {
        py.detach(|| sweeps::coverage_csv(&self.0, &psi_db, ptn0_db, trials, seed, shards)).py()
    }

    #[pyo3(signature = (snr_db, relay_counts = vec![1, 3]))]
    fn throughput_csv(&self, snr_db: Vec<f64>, relay_counts: Vec<usize>) -> PyResult<String> {
        sweeps::throughput_csv(&self.0, &snr_db, &relay_counts).py()
    }
}

/// Single-link BER over AWGN at bin SNR `gamma`, one symbol per trial.
#[pyfunction]
#[pyo3(signature = (modem, gamma, trials, seed = 0))]
fn estimate_awgn_ber<'py>(
    py: Python<'py>,
    modem: PyModemConfig,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let e = py.detach(|| montecarlo::estimate_awgn_ber(modem.0, gamma, trials, seed, 1)).py()?;
    estimate_dict(py, &e)
}

#[pyfunction]
#[pyo3(signature = (sf_min = 7, sf_max = 12))]
fn modem_selftest(sf_min: u32, sf_max: u32) -> PyResult<String> {
    let sfs: Vec<u32> = (sf_min..=sf_max).collect();
    sweeps::modem_selftest(&sfs).py().map(|l| sweeps::format_selftest(&l))
}

#[pymodule]
fn lora_relay_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModemConfig>()?;
    m.add_class::<PyBranchParams>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(conditional_ber, m)?)?;
    m.add_function(wrap_pyfunction!(analytical_ber, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_ber, m)?)?;
    m.add_function(wrap_pyfunction!(diversity_order, m)?)?;
    m.add_function(wrap_pyfunction!(single_link_ber, m)?)?;
    m.add_function(wrap_pyfunction!(max_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(max_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(throughput, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_awgn_ber, m)?)?;
    m.add_function(wrap_pyfunction!(modem_selftest, m)?)?;
    Ok(())
}
