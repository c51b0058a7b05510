//! Python bindings: bands, lattice propagation, cavity maps and scenario runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use metacrystal::band;
use metacrystal::cavity::{self, CavityConfig, GratingProfile, InjectionSpec, MaskProfile};
use metacrystal::lattice::{self, PotentialProfile};
use metacrystal::scenario;
use metacrystal::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Schema { .. } | Error::InvalidParameter { .. } | Error::DegenerateWidth(_) | Error::GratingTooStrong(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A band curve `E(k)`.
#[pyclass(frozen, from_py_object, name = "DispersionSpec", module = "metacrystal_py")]
#[derive(Clone)]
struct PyDispersion(band::DispersionSpec);

#[pymethods]
impl PyDispersion {
    #[staticmethod]
    #[pyo3(signature = (amplitude=1.0, period=1.0))]
    fn sinusoidal(amplitude: f64, period: f64) -> PyResult<Self> {
        band::DispersionSpec::sinusoidal(amplitude, period).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (amplitude=1.0, period=1.0))]
    fn sawtooth(amplitude: f64, period: f64) -> PyResult<Self> {
        band::DispersionSpec::sawtooth(amplitude, period).map(Self).map_err(to_py)
    }

    /// Band from Fourier coefficients `{n: J_n}`.
    #[staticmethod]
    fn custom(period: f64, coefficients: BTreeMap<i64, Complex64>) -> PyResult<Self> {
        band::DispersionSpec::custom(period, coefficients).map(Self).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    fn evaluate(&self, k: f64) -> PyResult<f64> {
        self.0.evaluate(k).map_err(to_py)
    }

    fn group_velocity(&self, k: f64) -> f64 {
        self.0.group_velocity(k)
    }

    /// Hopping table `{n: J_n}` for `|n| <= max_offset`.
    fn hoppings(&self, max_offset: usize) -> PyResult<BTreeMap<i64, Complex64>> {
        Ok(self.0.hoppings(max_offset).map_err(to_py)?.iter().collect())
    }

    /// Hoppings of the same band on a ring of `sites` sites.
    fn ring_hoppings(&self, sites: usize) -> PyResult<BTreeMap<i64, Complex64>> {
        Ok(self.0.ring_hoppings(sites).map_err(to_py)?.iter().collect())
    }

    /// Partial Fourier sum with hoppings up to `max_offset`.
    fn reconstruct(&self, max_offset: usize, k: f64) -> PyResult<f64> {
        self.0.hoppings(max_offset).and_then(|h| h.reconstruct(k)).map_err(to_py)
    }

    #[pyo3(signature = (n_samples=256, tol=1e-12))]
    fn time_reversal_symmetric(&self, n_samples: usize, tol: f64) -> PyResult<bool> {
        self.0.time_reversal_symmetric(n_samples, tol).map_err(to_py)
    }

    /// `(one_way, v_min, v_max)`.
    #[pyo3(signature = (n_samples=256))]
    fn one_way_certificate(&self, n_samples: usize) -> PyResult<(bool, f64, f64)> {
        let c = self.0.one_way_certificate(n_samples).map_err(to_py)?;
        Ok((c.one_way, c.v_min, c.v_max))
    }

    fn __repr__(&self) -> String {
        format!("DispersionSpec.{}(amplitude={}, period={})", self.0.name(), self.0.amplitude(), self.0.period())
    }
}

/// Lattice amplitudes with physical site labels.
#[pyclass(frozen, from_py_object, name = "LatticeState", module = "metacrystal_py")]
#[derive(Clone)]
struct PyState(lattice::LatticeState);

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (amplitudes, origin=0))]
    fn new(amplitudes: Vec<Complex64>, origin: i64) -> PyResult<Self> {
        lattice::LatticeState::new(amplitudes, origin).map(Self).map_err(to_py)
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    #[getter]
    fn origin(&self) -> i64 {
        self.0.origin()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.sites()
    }

    fn labels(&self) -> Vec<i64> {
        (0..self.0.sites()).map(|i| self.0.label(i)).collect()
    }

    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    fn center_of_mass(&self) -> PyResult<f64> {
        self.0.center_of_mass().map_err(to_py)
    }

    fn spread(&self) -> PyResult<f64> {
        self.0.spread().map_err(to_py)
    }

    /// `(transmitted, reflected, trapped)` about `barrier_site`.
    fn scattering(&self, barrier_site: i64) -> (f64, f64, f64) {
        let s = lattice::scattering_split(&self.0, barrier_site);
        (s.transmitted, s.reflected, s.trapped)
    }
}

#[pyclass(frozen, name = "Trajectory", module = "metacrystal_py")]
struct PyTrajectory(lattice::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn norms(&self) -> Vec<f64> {
        self.0.norms.clone()
    }

    #[getter]
    fn centers_of_mass(&self) -> Vec<f64> {
        self.0.centers_of_mass.clone()
    }

    #[getter]
    fn final_state(&self) -> Option<PyState> {
        self.0.final_state().cloned().map(PyState)
    }

    fn snapshot_near(&self, t: f64) -> PyResult<PyState> {
        self.0.snapshot_near(t).cloned().map(PyState).map_err(to_py)
    }

    fn com_slope(&self, start: f64, stop: f64) -> PyResult<f64> {
        self.0.com_slope(start, stop).map_err(to_py)
    }

    fn norm_drift(&self) -> f64 {
        self.0.norm_drift()
    }

    /// `(transmitted, reflected, trapped)` at the sample nearest `t`.
    fn transmission_reflection(&self, barrier_site: i64, t: f64) -> PyResult<(f64, f64, f64)> {
        let s = lattice::transmission_reflection(&self.0, barrier_site, t).map_err(to_py)?;
        Ok((s.transmitted, s.reflected, s.trapped))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn potential(values: Option<Vec<f64>>, sites: usize) -> PyResult<PotentialProfile> {
    match values {
        Some(v) => PotentialProfile::from_values(v),
        None => PotentialProfile::none(sites),
    }
    .map_err(to_py)
}

#[pyfunction]
fn gaussian_packet(sites: usize, center: f64, sigma_sq: f64, k0a: f64) -> PyResult<PyState> {
    lattice::gaussian_packet(sites, center, sigma_sq, k0a).map(PyState).map_err(to_py)
}

#[pyfunction]
fn uniform_disorder(count: usize, half_width: f64, seed: u64) -> Vec<f64> {
    lattice::uniform_disorder(count, half_width, seed)
}

/// Strang split-step evolution.
#[pyfunction]
#[pyo3(signature = (state, spec, duration, dt=0.01, potential_values=None, sample_every=100, keep_snapshots=false))]
#[allow(clippy::too_many_arguments)]
fn propagate_splitstep(
    py: Python<'_>,
    state: &PyState,
    spec: &PyDispersion,
    duration: f64,
    dt: f64,
    potential_values: Option<Vec<f64>>,
    sample_every: usize,
    keep_snapshots: bool,
) -> PyResult<PyTrajectory> {
    let pot = potential(potential_values, state.0.sites())?;
    let (state, spec) = (state.0.clone(), spec.0.clone());
    py.detach(|| lattice::propagate_splitstep(&state, &spec, &pot, duration, dt, sample_every, keep_snapshots))
        .map(PyTrajectory)
        .map_err(to_py)
}

/// Exact evolution by diagonalizing the ring Hamiltonian.
#[pyfunction]
#[pyo3(signature = (state, spec, duration, potential_values=None))]
fn propagate_dense(py: Python<'_>, state: &PyState, spec: &PyDispersion, duration: f64, potential_values: Option<Vec<f64>>) -> PyResult<PyState> {
    let sites = state.0.sites();
    let pot = potential(potential_values, sites)?;
    let (state, spec) = (state.0.clone(), spec.0.clone());
    py.detach(|| {
        let h = lattice::build_hamiltonian(&spec.ring_hoppings(sites)?, &pot, sites)?;
        lattice::propagate_dense(&state, &h, duration)
    })
    .map(PyState)
    .map_err(to_py)
}

#[pyfunction]
fn metacrystal_period(wavelength: f64, focal: f64, grating_period: f64) -> PyResult<f64> {
    cavity::metacrystal_period(wavelength, focal, grating_period).map_err(to_py)
}

fn grating(kind: &str, amplitude: f64) -> PyResult<GratingProfile> {
    match kind {
        "sawtooth" => Ok(GratingProfile::Sawtooth { amplitude }),
        "sinusoidal" => Ok(GratingProfile::Sinusoidal { amplitude }),
        other => Err(PyValueError::new_err(format!("unknown grating {other:?}"))),
    }
}

/// Driven run of the reference resonator (633 nm, f = 2 cm, A = 30 μm,
/// T = 2 %). Returns `(trips, normalized powers, centroids in periods)`.
#[pyfunction]
#[pyo3(signature = (grating_kind, amplitude=0.5, n_trips=100, defect_depth=None))]
fn run_cavity(py: Python<'_>, grating_kind: &str, amplitude: f64, n_trips: u64, defect_depth: Option<f64>) -> PyResult<(Vec<u64>, Vec<f64>, Vec<f64>)> {
    let mask = match defect_depth {
        Some(depth) => MaskProfile::GaussianWell {
            depth,
            center: 1600e-6,
            width: 600e-6,
        },
        None => MaskProfile::None,
    };
    let cfg = CavityConfig::reference(grating(grating_kind, amplitude)?, mask);
    let a = cfg.metacrystal_period();
    let run = py.detach(|| cavity::run_driven(&cfg, &InjectionSpec::reference(), n_trips, None)).map_err(to_py)?;
    let centroids = run.centroids.iter().map(|c| c / a).collect();
    Ok((run.trips.clone(), run.normalized_powers(), centroids))
}

/// `(max_error, overlap)` between the reference cavity and its lattice.
#[pyfunction]
#[pyo3(signature = (grating_kind, amplitude=0.05, n_trips=100))]
fn correspondence_check(py: Python<'_>, grating_kind: &str, amplitude: f64, n_trips: u64) -> PyResult<(f64, f64)> {
    let cfg = CavityConfig::reference(grating(grating_kind, amplitude)?, MaskProfile::None);
    py.detach(|| {
        let a = cfg.metacrystal_period();
        let spec = cfg.grating.dispersion(a).ok_or_else(|| Error::InvalidParameter { name: "grating", reason: "no closed-form band".into() })?;
        let (periods, _) = cfg.lattice_alignment()?;
        cavity::correspondence_check(&cfg, &spec, &PotentialProfile::none(periods)?, &InjectionSpec::reference(), n_trips)
    })
    .map(|c| (c.max_error, c.overlap))
    .map_err(to_py)
}

/// Parses a scenario file and returns the resolved configuration.
#[pyfunction]
fn parse_config(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    let cfg = scenario::parse_config(path).map_err(to_py)?;
    let value: serde_json::Value = serde_json::from_str(&cfg.resolved_json()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// Runs a scenario file, writes its outputs into `out_dir` and returns the summary.
#[pyfunction]
#[pyo3(signature = (path, out_dir, seed=None, workers=None))]
fn run_scenario(py: Python<'_>, path: PathBuf, out_dir: PathBuf, seed: Option<u64>, workers: Option<usize>) -> PyResult<Py<PyAny>> {
    let cfg = scenario::parse_config(path).map_err(to_py)?.with_seed(seed);
    let outcome = py.detach(|| scenario::run_scenario(&cfg, &out_dir, workers)).map_err(to_py)?;
    json_to_py(py, &outcome.summary)
}

#[pymodule]
fn metacrystal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", scenario::TOOL_VERSION)?;
    m.add_class::<PyDispersion>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(gaussian_packet, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_disorder, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_splitstep, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_dense, m)?)?;
    m.add_function(wrap_pyfunction!(metacrystal_period, m)?)?;
    m.add_function(wrap_pyfunction!(run_cavity, m)?)?;
    m.add_function(wrap_pyfunction!(correspondence_check, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
