//! Python bindings. Vectors cross the boundary as `[x, y, z]` lists and
//! reports as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use spherosim::dynamics::{evolve, spinning_fit, EvolveConfig, Scheme};
use spherosim::error::Error;
use spherosim::field::{from_equivariant, hedgehog, random_smooth_field, rotate_joint, trial_profile};
use spherosim::functionals::{diagnostics, EnergyParams};
use spherosim::geometry::build_icosphere;
use spherosim::minimizer::{equivariance_defect, minimize_constrained, minimize_free, seed_field, MinimizeOptions};
use spherosim::oracle::oracle_report;
use spherosim::verify::{run_suite_with, SuiteConfig};
use spherosim::{io, Rotation, Vec3};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::LevelOutOfRange(_)
        | Error::NonUnitDirection(_)
        | Error::EpsilonOutOfRange(_)
        | Error::NotARotation { .. }
        | Error::TargetTooSmall(_)
        | Error::InvalidInput(_)
        | Error::Io(_)
        | Error::SouthPoleSingularity
        | Error::ProfileOutOfRange(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn params(kappa: f64) -> PyResult<EnergyParams> {
    EnergyParams::new(kappa).map_err(to_py)
}

/// Any serializable report as a Python dict.
fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn options(json: Option<&str>) -> PyResult<MinimizeOptions> {
    let opts: MinimizeOptions = match json {
        Some(t) => serde_json::from_str(t).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => MinimizeOptions::default(),
    };
    opts.validate().map_err(to_py)?;
    Ok(opts)
}

/// A unit-vector field on the icosphere of some level.
#[pyclass(frozen, name = "Field")]
pub struct PyField {
    inner: spherosim::Field,
}

fn wrap(inner: spherosim::Field) -> PyField {
    PyField { inner }
}

#[pymethods]
impl PyField {
    /// Field from one unit vector per mesh vertex.
    #[new]
    fn new(level: usize, values: Vec<Vec3>) -> PyResult<Self> {
        let mesh = build_icosphere(level).map_err(to_py)?;
        spherosim::Field::new(mesh, values).map(wrap).map_err(to_py)
    }

    /// `sign * nu`.
    #[staticmethod]
    #[pyo3(signature = (level, sign = 1))]
    fn hedgehog(level: usize, sign: i32) -> PyResult<Self> {
        if sign != 1 && sign != -1 {
            return Err(PyValueError::new_err("sign must be 1 or -1"));
        }
        Ok(wrap(hedgehog(sign, build_icosphere(level).map_err(to_py)?)))
    }

    /// Co-rotational trial field with core scale `eps`.
    #[staticmethod]
    fn trial(level: usize, eps: f64) -> PyResult<Self> {
        let mesh = build_icosphere(level).map_err(to_py)?;
        from_equivariant(&trial_profile(eps).map_err(to_py)?, mesh).map(wrap).map_err(to_py)
    }

    /// Smooth seeded random field of charge -1, 0 or 1.
    #[staticmethod]
    #[pyo3(signature = (level, charge = 0, amp = 0.3, seed = 7))]
    fn random(level: usize, charge: i32, amp: f64, seed: u64) -> PyResult<Self> {
        if !(-1..=1).contains(&charge) || !(amp > 0.0) {
            return Err(PyValueError::new_err("charge must be -1, 0 or 1 and amp positive"));
        }
        Ok(wrap(random_smooth_field(build_icosphere(level).map_err(to_py)?, charge, amp, seed)))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        io::load_field(&path).map(wrap).map_err(to_py)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        io::save_field(&self.inner, &path).map_err(to_py)
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.mesh().level()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn values(&self) -> Vec<Vec3> {
        self.inner.values().to_vec()
    }

    fn vertices(&self) -> Vec<Vec3> {
        self.inner.mesh().vertices().to_vec()
    }

    /// Energy parts, charge and momenta.
    fn diagnostics<'py>(&self, py: Python<'py>, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
        let d = diagnostics(&self.inner, params(kappa)?).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("exchange", d.exchange)?;
        out.set_item("anisotropy", d.anisotropy)?;
        out.set_item("energy", d.total)?;
        out.set_item("charge", d.q)?;
        out.set_item("S", d.s)?;
        out.set_item("L", d.l)?;
        out.set_item("J", d.j)?;
        Ok(out.into_any())
    }

    fn equivariance_defect(&self) -> f64 {
        equivariance_defect(&self.inner)
    }

    /// Joint rotation by `angle` about `axis`.
    fn rotate(&self, axis: Vec3, angle: f64) -> PyResult<Self> {
        let n = spherosim::vec3::norm(axis);
        if !(n > 0.0) {
            return Err(PyValueError::new_err("axis must be nonzero"));
        }
        let r = Rotation::about_axis(spherosim::vec3::scale(axis, 1.0 / n), angle);
        rotate_joint(&self.inner, &r).map(wrap).map_err(to_py)
    }

    /// L2 distance to another field on the same mesh.
    fn distance(&self, other: &PyField) -> PyResult<f64> {
        if self.inner.len() != other.inner.len() {
            return Err(PyValueError::new_err("fields live on different meshes"));
        }
        Ok(self.inner.l2_distance(&other.inner))
    }

    /// Landau-Lifshitz evolution with RK4. Returns the final field and the
    /// drifts `(E, J, Q)`.
    #[pyo3(signature = (kappa, dt, t_end, scheme = "rk4"))]
    fn evolve(&self, py: Python<'_>, kappa: f64, dt: f64, t_end: f64, scheme: &str) -> PyResult<(Self, (f64, f64, f64))> {
        let scheme: Scheme = scheme.parse().map_err(|e| PyValueError::new_err(format!("{e}")))?;
        let p = params(kappa)?;
        let cfg = EvolveConfig { dt, t_end, record_every: 10, scheme };
        let ev = py.detach(|| evolve(&self.inner, &cfg, p)).map_err(to_py)?;
        let drifts = ev.drifts();
        Ok((wrap(ev.field), drifts))
    }

    /// Least-squares rotation frequency and its relative residual.
    fn spinning_fit(&self, kappa: f64) -> PyResult<(f64, f64)> {
        let f = spinning_fit(&self.inner, params(kappa)?);
        Ok((f.nu_hat, f.residual_rel))
    }

    fn __repr__(&self) -> String {
        format!("Field(level={}, vertices={})", self.inner.mesh().level(), self.inner.len())
    }
}

/// Energy minimization under `J = j_target` from the distorted trial seed.
/// `options` is a JSON object of minimizer options.
#[pyfunction]
#[pyo3(signature = (level, j_target, kappa, options = None))]
fn minimize<'py>(
    py: Python<'py>,
    level: usize,
    j_target: Vec3,
    kappa: f64,
    options: Option<&str>,
) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let (p, opts) = (params(kappa)?, self::options(options)?);
    let (m, report) = py
        .detach(|| seed_field(j_target, p, level, None).and_then(|s| minimize_constrained(&s.field, j_target, p, &opts)))
        .map_err(to_py)?;
    Ok((wrap(m), to_dict(py, &report)?))
}

/// Energy minimization at fixed charge, starting from `field`.
#[pyfunction]
#[pyo3(signature = (field, kappa, options = None))]
fn minimize_free_from<'py>(
    py: Python<'py>,
    field: &PyField,
    kappa: f64,
    options: Option<&str>,
) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let (p, opts) = (params(kappa)?, self::options(options)?);
    let (m, report) = py.detach(|| minimize_free(&field.inner, p, &opts)).map_err(to_py)?;
    Ok((wrap(m), to_dict(py, &report)?))
}

/// Radial quadrature of the trial profile: energy, charge, S3, L3, J3.
#[pyfunction]
fn oracle_trial<'py>(py: Python<'py>, eps: f64, kappa: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = oracle_report(&trial_profile(eps).map_err(to_py)?, params(kappa)?).map_err(to_py)?;
    to_dict(py, &r)
}

/// Runs check groups of the verification suite; returns the report dict.
#[pyfunction]
#[pyo3(signature = (level, kappa = 50.0, seed = 7, groups = Vec::new()))]
fn verify<'py>(py: Python<'py>, level: usize, kappa: f64, seed: u64, groups: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SuiteConfig { level, kappa, seed, groups, ..Default::default() };
    let report = py.detach(|| run_suite_with(&cfg)).map_err(to_py)?;
    to_dict(py, &report)
}

#[pymodule]
fn spherosim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_free_from, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_trial, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
