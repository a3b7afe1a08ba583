//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers; schemes are passed by name (`"optimal"`, `"standard_a"`, ...).

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dampcode::channels::amplitude_damping;
use dampcode::circuits::{cry_angle, waveplate_angle, WaveplateOp};
use dampcode::code::{EncodingIsometry, Syndrome};
use dampcode::experiment::{self, SweepSpec};
use dampcode::noise::{self, Weighting};
use dampcode::recovery::{self, SchemeKind};
use dampcode::{CMatrix, DampingParam, DensityMatrix};

type Matrix = Vec<Vec<Complex64>>;

fn py_err(e: dampcode::Error) -> PyErr {
    match e {
        dampcode::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn gamma(g: f64) -> PyResult<DampingParam> {
    DampingParam::new(g).map_err(py_err)
}

fn scheme(name: &str) -> PyResult<SchemeKind> {
    name.parse().map_err(py_err)
}

fn syndrome(pair: (u8, u8)) -> PyResult<Syndrome> {
    Syndrome::new(pair.0, pair.1).map_err(py_err)
}

fn weighting(ideal: bool) -> Weighting {
    if ideal {
        Weighting::Ideal
    } else {
        Weighting::Measured
    }
}

fn to_rows(m: &CMatrix) -> Matrix {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: Matrix) -> PyResult<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    CMatrix::from_vec(r, c, rows.into_iter().flatten().collect()).map_err(py_err)
}

/// Device noise description; build with `preset`, `from_json` or `ideal`.
#[pyclass(name = "NoiseModel", frozen, skip_from_py_object)]
struct PyNoiseModel {
    inner: noise::NoiseModel,
}

#[pymethods]
impl PyNoiseModel {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        noise::NoiseModel::preset(name).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        noise::NoiseModel::from_json_str(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn ideal() -> Self {
        Self { inner: noise::NoiseModel::ideal() }
    }

    #[staticmethod]
    fn preset_names() -> Vec<&'static str> {
        noise::PRESET_NAMES.to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel('{}')", self.inner.name)
    }
}

fn model_ref<'a>(m: &'a Option<PyRef<'_, PyNoiseModel>>) -> Option<&'a noise::NoiseModel> {
    m.as_ref().map(|p| &p.inner)
}

/// Kraus operators of the damping channel, keyed by branch label.
#[pyfunction]
fn amplitude_damping_kraus(g: f64) -> PyResult<Vec<(Vec<u8>, Matrix)>> {
    let ch = amplitude_damping(gamma(g)?);
    Ok(ch.branches().iter().map(|b| (b.label.0.clone(), to_rows(&b.kraus))).collect())
}

#[pyfunction]
fn encoding_isometry() -> Matrix {
    to_rows(EncodingIsometry::new().matrix())
}

/// `s`, `t`, `u1`, `u2` of the closed-form optimal recovery.
#[pyfunction]
fn optimal_params<'py>(py: Python<'py>, g: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = recovery::optimal_params(gamma(g)?);
    let d = PyDict::new(py);
    d.set_item("s", p.s)?;
    d.set_item("t", p.t)?;
    d.set_item("u1", to_rows(&p.u1))?;
    d.set_item("u2", to_rows(&p.u2))?;
    Ok(d)
}

/// Gates `v1..v4` and the conditional correction `p` for one syndrome.
#[pyfunction]
fn recovery_gates<'py>(py: Python<'py>, name: &str, syn: (u8, u8), g: f64) -> PyResult<Bound<'py, PyDict>> {
    let ops = recovery::scheme_ops(scheme(name)?, syndrome(syn)?, gamma(g)?).map_err(py_err)?;
    let d = PyDict::new(py);
    for (key, m) in ["v1", "v2", "v3", "v4", "p"].iter().zip(ops.all()) {
        d.set_item(*key, to_rows(m))?;
    }
    Ok(d)
}

/// Polar isometry of the encoded branch operator for `syn`.
#[pyfunction]
fn polar_isometry(syn: (u8, u8), g: f64) -> PyResult<Matrix> {
    let set = recovery::generic_polar_recovery(&EncodingIsometry::new(), gamma(g)?).map_err(py_err)?;
    Ok(to_rows(set.get(syndrome(syn)?)))
}

/// Ideal end-to-end output for a single-qubit input density matrix.
#[pyfunction]
fn recovered_state(name: &str, g: f64, rho: Matrix) -> PyResult<Matrix> {
    let input = DensityMatrix::new(from_rows(rho)?).map_err(py_err)?;
    let out = recovery::recovered_state(scheme(name)?, gamma(g)?, &input).map_err(py_err)?;
    Ok(to_rows(out.matrix()))
}

#[pyfunction]
#[pyo3(signature = (name, g, noise=None, ideal_weights=false))]
fn channel_fidelity(name: &str, g: f64, noise: Option<PyRef<'_, PyNoiseModel>>, ideal_weights: bool) -> PyResult<f64> {
    experiment::channel_fidelity_weighted(scheme(name)?, gamma(g)?, model_ref(&noise), weighting(ideal_weights))
        .map_err(py_err)
}

#[pyfunction]
fn gamma_grid(start: f64, stop: f64, points: usize) -> PyResult<Vec<f64>> {
    experiment::gamma_grid(start, stop, points).map_err(py_err)
}

/// Sweep rows as dicts with the CSV columns as keys.
#[pyfunction]
#[pyo3(signature = (gammas, schemes, noise=None, shots=0, seed=0, ideal_weights=false))]
fn sweep<'py>(
    py: Python<'py>,
    gammas: Vec<f64>,
    schemes: Vec<String>,
    noise: Option<PyRef<'_, PyNoiseModel>>,
    shots: u64,
    seed: u64,
    ideal_weights: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let schemes = schemes.iter().map(|s| scheme(s)).collect::<PyResult<Vec<_>>>()?;
    let spec = SweepSpec {
        gammas,
        schemes,
        model: model_ref(&noise),
        shots,
        seed,
        weighting: weighting(ideal_weights),
    };
    let recs = py.detach(|| experiment::run_sweep(&spec)).map_err(py_err)?;
    recs.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("gamma", r.gamma)?;
            d.set_item("scheme", r.scheme.name())?;
            d.set_item("fidelity", r.fidelity)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("shots", r.shots)?;
            d.set_item("noise_preset", &r.noise_preset)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn crossover(gammas: Vec<f64>, corrected: Vec<f64>, uncorrected: Vec<f64>) -> PyResult<Option<f64>> {
    experiment::crossover(&gammas, &corrected, &uncorrected).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (name, gammas, noise=None))]
fn find_crossover(name: &str, gammas: Vec<f64>, noise: Option<PyRef<'_, PyNoiseModel>>) -> PyResult<Option<f64>> {
    experiment::find_crossover(scheme(name)?, model_ref(&noise), &gammas).map_err(py_err)
}

/// Shot-sampled six-state fidelity; returns `(fidelity, stderr)`.
#[pyfunction]
#[pyo3(signature = (name, g, shots, seed=0, noise=None, ideal_weights=false))]
fn shot_experiment(
    py: Python<'_>,
    name: &str,
    g: f64,
    shots: u64,
    seed: u64,
    noise: Option<PyRef<'_, PyNoiseModel>>,
    ideal_weights: bool,
) -> PyResult<(f64, f64)> {
    let (kind, gp) = (scheme(name)?, gamma(g)?);
    let model = model_ref(&noise);
    let r = py
        .detach(|| experiment::shot_experiment(kind, gp, model, shots, seed, weighting(ideal_weights)))
        .map_err(py_err)?;
    Ok((r.fidelity, r.stderr))
}

#[pyfunction]
fn decoherence_estimate(duration: f64, t2: f64) -> PyResult<f64> {
    noise::decoherence_estimate(duration, t2).map(|d| d.p_sys).map_err(py_err)
}

/// `(hwp_a0_deg, hwp_a1_deg, cry_theta_rad)`.
#[pyfunction]
fn angles(g: f64) -> PyResult<(f64, f64, f64)> {
    let gp = gamma(g)?;
    Ok((
        waveplate_angle(gp, WaveplateOp::A0),
        waveplate_angle(gp, WaveplateOp::A1),
        cry_angle(gp),
    ))
}

/// Runs the invariant suite; returns `(name, passed, detail)` triples.
#[pyfunction]
fn verify(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(|| dampcode::verify::run_suite(None))
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
#[pyo3(name = "dampcode")]
fn dampcode_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseModel>()?;
    m.add("SCHEMES", SchemeKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(amplitude_damping_kraus, m)?)?;
    m.add_function(wrap_pyfunction!(encoding_isometry, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_params, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_gates, m)?)?;
    m.add_function(wrap_pyfunction!(polar_isometry, m)?)?;
    m.add_function(wrap_pyfunction!(recovered_state, m)?)?;
    m.add_function(wrap_pyfunction!(channel_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(crossover, m)?)?;
    m.add_function(wrap_pyfunction!(find_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(shot_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(angles, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
