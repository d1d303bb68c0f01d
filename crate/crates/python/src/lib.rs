//! Python bindings for `dcslab`.

use std::collections::HashMap;

use dcslab::brownian::{continuum_argmin_on, DyadicInterval};
use dcslab::config::RunConfig;
use dcslab::coupling::{run_coupling as run_race, CouplingOptions, CouplingTrace, NormalizationCheck, OracleSpec};
use dcslab::densities::{PhiEvaluator, PhiVariant, QuadratureSpec};
use dcslab::duality::{self, parse_rational, BlockSet, FiniteMeasure};
use dcslab::joining::uniform_exponential_demo;
use dcslab::{brownian, enumeration, stats, suites, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Internal(_) | Error::Numeric { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn variant(name: &str) -> PyResult<PhiVariant> {
    match name {
        "joint-density" => Ok(PhiVariant::JointDensity),
        "printed" => Ok(PhiVariant::Printed),
        other => Err(PyValueError::new_err(format!("unknown phi variant '{other}'"))),
    }
}

/// Grid values of a Brownian path on `[0,1]` with `2^depth` steps.
#[pyfunction]
fn sample_path(depth: u32, seed: u64) -> PyResult<Vec<f64>> {
    Ok(brownian::sample_path(depth, seed).map_err(py_err)?.values().to_vec())
}

#[pyfunction]
fn sample_bridge(a: f64, b: f64, depth: u32, seed: u64) -> PyResult<Vec<f64>> {
    Ok(brownian::sample_bridge(a, b, depth, seed).map_err(py_err)?.values().to_vec())
}

/// `(argmin, min)` of the continuous path through the sampled skeleton.
#[pyfunction]
fn continuum_argmin(depth: u32, seed: u64) -> PyResult<(f64, f64)> {
    let path = brownian::sample_path(depth, seed).map_err(py_err)?;
    continuum_argmin_on(&path, DyadicInterval::unit(), seed ^ 0x5eed).map_err(py_err)
}

/// First `m` minimizer locations `X_1..X_m` of a sampled path.
#[pyfunction]
fn enumerate_minimizers(depth: u32, seed: u64, m: u64) -> PyResult<Vec<f64>> {
    let path = brownian::sample_path(depth, seed).map_err(py_err)?;
    Ok(enumeration::enumerate_minimizers(&path, m).map_err(py_err)?.xs)
}

#[pyfunction]
fn level_argmins(depth: u32, seed: u64, k: u32) -> PyResult<Vec<f64>> {
    let path = brownian::sample_path(depth, seed).map_err(py_err)?;
    enumeration::level_argmins(&path, k).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (a, b, t, variant_name = "joint-density"))]
fn phi(a: f64, b: f64, t: f64, variant_name: &str) -> PyResult<f64> {
    PhiEvaluator::new(variant(variant_name)?, QuadratureSpec::default()).phi(a, b, t).map_err(py_err)
}

/// `(constant, defect)` of the normalization of `phi(a, b, .)`.
#[pyfunction]
#[pyo3(signature = (a, b, variant_name = "joint-density"))]
fn phi_normalization(a: f64, b: f64, variant_name: &str) -> PyResult<(f64, f64)> {
    let n = PhiEvaluator::new(variant(variant_name)?, QuadratureSpec::default()).normalization(a, b).map_err(py_err)?;
    Ok((n.constant, n.defect))
}

/// One racing extraction on a Poisson strip of height `height`.
#[pyclass(frozen)]
struct Trace {
    inner: CouplingTrace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.ts()
    }

    #[getter]
    fn locations(&self) -> Vec<f64> {
        self.inner.ys()
    }

    #[getter]
    fn point_ids(&self) -> Vec<usize> {
        self.inner.steps.iter().map(|s| s.point_id).collect()
    }

    #[getter]
    fn l_star(&self) -> f64 {
        self.inner.l_star
    }

    #[getter]
    fn steps_below_height(&self) -> usize {
        self.inner.steps_below_height
    }

    /// Locations of consumed points below `level`.
    fn consumed_below(&self, level: f64) -> PyResult<Vec<f64>> {
        self.inner.consumed_below(level).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.steps.len()
    }
}

#[pyfunction]
#[pyo3(signature = (oracle = "iid-uniform", height = 30.0, seed = 1, n_max = None, tilt = 0.8, slope = 1.0))]
fn run_coupling(oracle: &str, height: f64, seed: u64, n_max: Option<usize>, tilt: f64, slope: f64) -> PyResult<Trace> {
    let spec = OracleSpec { id: oracle.into(), tilt, slope, ..OracleSpec::default() };
    let o = spec.build().map_err(py_err)?;
    let mut options = CouplingOptions::for_height(height);
    if let Some(n) = n_max {
        options = CouplingOptions { n_max: n, normalization_check: NormalizationCheck::EveryStep };
    }
    Ok(Trace { inner: run_race(o.as_ref(), height, options, seed).map_err(py_err)? })
}

fn measure(weights: Vec<String>) -> PyResult<FiniteMeasure> {
    let w = weights.iter().map(|s| parse_rational(s)).collect::<dcslab::Result<Vec<_>>>().map_err(py_err)?;
    FiniteMeasure::new(w).map_err(py_err)
}

/// Exact `(max_mass, cover_u, cover_v)` for weights given as rational
/// strings and `W` as a list of `(U, V)` blocks. Values are `"p/q"` strings.
#[pyfunction]
fn max_mass_min_cover(
    mu: Vec<String>,
    nu: Vec<String>,
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
) -> PyResult<(String, String, Vec<usize>, Vec<usize>)> {
    let (mu, nu) = (measure(mu)?, measure(nu)?);
    let w = BlockSet::new(mu.len(), blocks).map_err(py_err)?;
    let m = duality::max_mass(&mu, &nu, &w).map_err(py_err)?;
    let c = duality::min_cover(&mu, &nu, &w).map_err(py_err)?;
    Ok((m.value.to_string(), c.value.to_string(), c.u, c.v))
}

/// `(residual_mass, sweeps, shifts)` of the uniform/exponential joining.
#[pyfunction]
#[pyo3(signature = (l = 256, sweeps = 50))]
fn rational_demo(l: i64, sweeps: usize) -> PyResult<(f64, usize, usize)> {
    let plan = uniform_exponential_demo(l, sweeps).map_err(py_err)?;
    Ok((plan.residual_mass(), plan.sweeps(), plan.entries.len()))
}

/// `(statistic, p_value)` of a one-sample KS test against `uniform`,
/// `exp1` or `arcsine`.
#[pyfunction]
fn ks_test(sample: Vec<f64>, distribution: &str) -> PyResult<(f64, f64)> {
    let cdf: fn(f64) -> f64 = match distribution {
        "uniform" => stats::uniform_cdf,
        "exp1" => stats::exp1_cdf,
        "arcsine" => stats::arcsine_cdf,
        other => return Err(PyValueError::new_err(format!("unknown distribution '{other}'"))),
    };
    let r = stats::ks_test(&sample, cdf).map_err(py_err)?;
    Ok((r.statistic, r.p_value))
}

/// Runs a suite in memory; returns `(pass, files)` with `files` mapping
/// relative paths to contents.
#[pyfunction]
#[pyo3(signature = (command, settings = None))]
fn run_suite(command: &str, settings: Option<HashMap<String, String>>) -> PyResult<(bool, HashMap<String, String>)> {
    let mut cfg = RunConfig::default();
    let mut pairs: Vec<_> = settings.unwrap_or_default().into_iter().collect();
    pairs.sort();
    for (k, v) in pairs {
        cfg.set(&k, &v).map_err(py_err)?;
    }
    let out = suites::run_command(command, &cfg).map_err(py_err)?;
    Ok((out.pass(), out.files().into_iter().collect()))
}

#[pymodule]
fn dcslab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", dcslab::config::VERSION)?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    m.add_function(wrap_pyfunction!(sample_bridge, m)?)?;
    m.add_function(wrap_pyfunction!(continuum_argmin, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_minimizers, m)?)?;
    m.add_function(wrap_pyfunction!(level_argmins, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_normalization, m)?)?;
    m.add_function(wrap_pyfunction!(run_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(max_mass_min_cover, m)?)?;
    m.add_function(wrap_pyfunction!(rational_demo, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
