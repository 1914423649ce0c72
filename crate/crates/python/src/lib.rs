//! Python bindings: GEV helpers, the max-stable simulator and its checks,
//! counterexample estimates and the hypo-convergence test on 1-d grids.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use uscx_core::gev::{gev_cdf, gev_quantile, params_from_quantiles};
use uscx_core::grid::{hypo_converges, DEFAULT_RADIUS, DEFAULT_SLACK};
use uscx_core::maxstable::{capacity_closed_form, capacity_empirical, check_simple_max_stability};
use uscx_core::scenario::estimate_nonusc_probability;
use uscx_core::{
    CompactProbe, Domain, ExtReal, GalleryEntry, GalleryId, GevParams, GridField, MaxStableSampler,
    Rect, SpectralModel,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn params(gamma: f64, mu: f64, sigma: f64) -> PyResult<GevParams> {
    GevParams::new(gamma, mu, sigma).map_err(err)
}

fn model(name: &str, radius: f64, height: f64) -> PyResult<SpectralModel> {
    match name {
        "constant_one" => Ok(SpectralModel::ConstantOne),
        "storm" => Ok(SpectralModel::Storm { radius, height }),
        other => Err(err(format!("unknown model `{other}`"))),
    }
}

fn sampler(name: &str, radius: f64, height: f64, resolution: usize) -> PyResult<MaxStableSampler> {
    let domain = Domain::interval(0.0, 1.0, resolution).map_err(err)?;
    MaxStableSampler::new(model(name, radius, height)?, domain).map_err(err)
}

/// `(lo, hi, level)` triples, one single-interval probe each.
fn probes(specs: &[(f64, f64, f64)]) -> Vec<CompactProbe> {
    specs
        .iter()
        .map(|&(lo, hi, level)| CompactProbe::single(Rect::interval(lo, hi), level))
        .collect()
}

#[pyfunction(name = "gev_cdf")]
#[pyo3(signature = (x, gamma, mu = 0.0, sigma = 1.0))]
fn gev_cdf_py(x: f64, gamma: f64, mu: f64, sigma: f64) -> PyResult<f64> {
    Ok(gev_cdf(ExtReal::from(x), &params(gamma, mu, sigma)?))
}

#[pyfunction(name = "gev_quantile")]
#[pyo3(signature = (p, gamma, mu = 0.0, sigma = 1.0))]
fn gev_quantile_py(p: f64, gamma: f64, mu: f64, sigma: f64) -> PyResult<f64> {
    Ok(gev_quantile(p, &params(gamma, mu, sigma)?).map_err(err)?.to_f64())
}

/// `(gamma, mu, sigma)` from the quantiles at `exp(-1)`, `p1` and `p2`.
#[pyfunction]
fn gev_fit(q: f64, q1: f64, q2: f64, p1: f64, p2: f64) -> PyResult<(f64, f64, f64)> {
    let t = params_from_quantiles(q, q1, q2, p1, p2).map_err(err)?;
    Ok((t.gamma, t.mu, t.sigma))
}

/// One field on `[0, 1]`; returns `(values, atoms)`.
#[pyfunction]
#[pyo3(signature = (seed, model = "storm", radius = 0.1, height = 1.0, resolution = 101))]
fn simulate(
    seed: u64,
    model: &str,
    radius: f64,
    height: f64,
    resolution: usize,
) -> PyResult<(Vec<f64>, usize)> {
    let sim = sampler(model, radius, height, resolution)?.simulate(seed).map_err(err)?;
    let values = sim.field.values().iter().map(|v| v.to_f64()).collect();
    Ok((values, sim.atoms))
}

/// Hit probability of one probe: `(closed_form, empirical, halfwidth)`.
#[pyfunction]
#[pyo3(signature = (lo, hi, level, n_samples, seed, model = "storm", radius = 0.1, height = 1.0, resolution = 101))]
#[allow(clippy::too_many_arguments)]
fn capacity(
    py: Python<'_>,
    lo: f64,
    hi: f64,
    level: f64,
    n_samples: u64,
    seed: u64,
    model: &str,
    radius: f64,
    height: f64,
    resolution: usize,
) -> PyResult<(f64, f64, f64)> {
    let s = sampler(model, radius, height, resolution)?;
    let probe = CompactProbe::single(Rect::interval(lo, hi), level);
    let miss = capacity_closed_form(&s.model, &s.domain, &probe, 0, seed).map_err(err)?;
    let emp = py
        .detach(|| capacity_empirical(&s, &probe, n_samples, seed))
        .map_err(err)?;
    Ok((1.0 - miss, emp.hit_rate, emp.halfwidth))
}

/// Max-stability report as a dict.
#[pyfunction]
#[pyo3(signature = (n, probe_list, n_samples, seed, model = "storm", radius = 0.1, height = 1.0, resolution = 101))]
#[allow(clippy::too_many_arguments)]
fn maxstab_check<'py>(
    py: Python<'py>,
    n: u64,
    probe_list: Vec<(f64, f64, f64)>,
    n_samples: u64,
    seed: u64,
    model: &str,
    radius: f64,
    height: f64,
    resolution: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let s = sampler(model, radius, height, resolution)?;
    let report = py
        .detach(|| check_simple_max_stability(&s, n, &probes(&probe_list), n_samples, seed))
        .map_err(err)?;
    to_py(py, &report)
}

/// Non-usc rate of a counterexample entry, as `(estimate, halfwidth)`.
#[pyfunction]
fn gallery_nonusc(py: Python<'_>, entry: &str, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let id: GalleryId = entry.parse().map_err(err)?;
    let e = GalleryEntry::get(id);
    let r = py
        .detach(|| estimate_nonusc_probability(&e, n_samples, seed))
        .map_err(err)?;
    Ok((r.estimate, r.halfwidth))
}

/// Verdict `pass`, `fail_upper` or `fail_lower` for fields sampled on an
/// equispaced grid over `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (sequence, limit, lo = 0.0, hi = 1.0, radius = DEFAULT_RADIUS, slack = DEFAULT_SLACK))]
fn hypoconv<'py>(
    py: Python<'py>,
    sequence: Vec<Vec<f64>>,
    limit: Vec<f64>,
    lo: f64,
    hi: f64,
    radius: usize,
    slack: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let domain = Domain::interval(lo, hi, limit.len()).map_err(err)?;
    let field = |v: Vec<f64>| {
        GridField::new(domain.clone(), v.into_iter().map(ExtReal::from).collect()).map_err(err)
    };
    let seq = sequence.into_iter().map(field).collect::<PyResult<Vec<_>>>()?;
    let verdict = hypo_converges(&seq, &field(limit)?, radius, slack).map_err(err)?;
    to_py(py, &verdict)
}

#[pymodule]
fn uscx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gev_cdf_py, m)?)?;
    m.add_function(wrap_pyfunction!(gev_quantile_py, m)?)?;
    m.add_function(wrap_pyfunction!(gev_fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(maxstab_check, m)?)?;
    m.add_function(wrap_pyfunction!(gallery_nonusc, m)?)?;
    m.add_function(wrap_pyfunction!(hypoconv, m)?)?;
    Ok(())
}
