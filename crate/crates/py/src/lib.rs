//! Python bindings: analytic oracles, the SA recursion, simulation and training.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coordlab_core::analytic::{self, SinglePeriodInstance};
use coordlab_core::config::LabConfig;
use coordlab_core::env::{JointAction, Simulator};
use coordlab_core::harness::{run_experiment, Scenario};
use coordlab_core::marl::Algorithm;
use coordlab_core::sa;
use coordlab_core::LabError;

fn py_err(e: LabError) -> PyErr {
    match e {
        LabError::Divergence(_) | LabError::Numerical(_) | LabError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
fn instance(p: f64, h: f64, b: f64, r: f64, rbar: f64, r0: (f64, f64), qbar: f64) -> PyResult<SinglePeriodInstance> {
    let inst = SinglePeriodInstance { p, h, b, r, rbar, r0: [r0.0, r0.1], qbar };
    inst.validate().map_err(py_err)?;
    Ok(inst)
}

/// Profit-maximizing intensities for fixed orders; returns `(alpha, regime)`.
#[pyfunction]
#[pyo3(signature = (q, p=2.0, h=1.5, b=0.5, r=1.0, rbar=2.0, r0=(0.0, -0.8), qbar=1.0))]
#[allow(clippy::too_many_arguments)]
fn optimal_alpha_given_q(
    q: (f64, f64),
    p: f64,
    h: f64,
    b: f64,
    r: f64,
    rbar: f64,
    r0: (f64, f64),
    qbar: f64,
) -> PyResult<((f64, f64), String)> {
    let inst = instance(p, h, b, r, rbar, r0, qbar)?;
    let (a, regime) = analytic::optimal_alpha_given_q(&inst, [q.0, q.1]).map_err(py_err)?;
    Ok(((a[0], a[1]), regime.as_str().to_string()))
}

/// Fractile order response to fixed intensities.
#[pyfunction]
#[pyo3(signature = (alpha, p=2.0, h=1.5, b=0.5, r=1.0, rbar=2.0, r0=(0.0, -0.8), qbar=1.0))]
#[allow(clippy::too_many_arguments)]
fn optimal_q_given_alpha(
    alpha: (f64, f64),
    p: f64,
    h: f64,
    b: f64,
    r: f64,
    rbar: f64,
    r0: (f64, f64),
    qbar: f64,
) -> PyResult<(f64, f64)> {
    let inst = instance(p, h, b, r, rbar, r0, qbar)?;
    let q = analytic::optimal_q_given_alpha(&inst, [alpha.0, alpha.1]).map_err(py_err)?;
    Ok((q[0], q[1]))
}

#[pyfunction]
#[pyo3(signature = (q, alpha, p=2.0, h=1.5, b=0.5, r=1.0, rbar=2.0, r0=(0.0, -0.8), qbar=1.0))]
#[allow(clippy::too_many_arguments)]
fn expected_profit(
    q: (f64, f64),
    alpha: (f64, f64),
    p: f64,
    h: f64,
    b: f64,
    r: f64,
    rbar: f64,
    r0: (f64, f64),
    qbar: f64,
) -> PyResult<f64> {
    let inst = instance(p, h, b, r, rbar, r0, qbar)?;
    analytic::exact_expected_profit_sp(&inst, [q.0, q.1], [alpha.0, alpha.1]).map_err(py_err)
}

/// Runs the two-timescale recursion on the interior fixture; returns the final `(q, alpha)`.
#[pyfunction]
#[pyo3(signature = (iterations=20_000, seed=0))]
fn run_sa(iterations: usize, seed: u64) -> PyResult<((f64, f64), (f64, f64))> {
    let run = sa::run_sa(&sa::interior_fixture(), &sa::default_config(iterations), seed).map_err(py_err)?;
    Ok(((run.last.q[0], run.last.q[1]), (run.last.alpha[0], run.last.alpha[1])))
}

/// Per-period rewards of constant-action episodes.
#[pyfunction]
#[pyo3(signature = (order=2.0, rec=0.0, episodes=1, seed=0, config=None))]
fn simulate(order: f64, rec: f64, episodes: usize, seed: u64, config: Option<&str>) -> PyResult<Vec<f64>> {
    let cfg = LabConfig::from_toml_str(config.unwrap_or("")).map_err(py_err)?;
    let mut action = JointAction::zeros(&cfg.env);
    action.orders.iter_mut().for_each(|q| *q = order);
    action.recommendations.iter_mut().flatten().for_each(|x| *x = rec);
    let mut sim = Simulator::new(cfg.env, seed).map_err(py_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rewards = Vec::new();
    for _ in 0..episodes {
        sim.reset(&mut rng);
        while !sim.done() {
            rewards.push(sim.step(&action, &mut rng).map_err(py_err)?.reward);
        }
    }
    Ok(rewards)
}

/// Trains one seed and returns its final metrics and learning curve.
#[pyfunction]
#[pyo3(signature = (seed=0, scenario="cooperative", algorithm="MTMA", config=None))]
fn train<'py>(
    py: Python<'py>,
    seed: u64,
    scenario: &str,
    algorithm: &str,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = LabConfig::from_toml_str(config.unwrap_or("")).map_err(py_err)?;
    let mut spec = cfg.spec();
    spec.seeds = vec![seed];
    spec.scenario = scenario.parse::<Scenario>().map_err(py_err)?;
    spec.algorithm = algorithm.parse::<Algorithm>().map_err(py_err)?;
    let result = py.detach(|| run_experiment(&spec)).map_err(py_err)?;
    let rep = &result.replications[0];
    let out = PyDict::new(py);
    out.set_item("total_profit", rep.final_row.total_profit)?;
    out.set_item("inventory_cost", rep.final_row.inventory_cost)?;
    out.set_item("marketing_revenue", rep.final_row.marketing_revenue)?;
    out.set_item("early_profit", rep.early_profit)?;
    out.set_item("iterations", rep.final_row.iteration)?;
    out.set_item("diverged", rep.divergence.is_some())?;
    let curve: Vec<(usize, f64)> = rep.curve.iter().map(|p| (p.iteration, p.mean_eval_profit)).collect();
    out.set_item("curve", curve)?;
    Ok(out)
}

#[pymodule]
fn coordlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(optimal_alpha_given_q, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_q_given_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(expected_profit, m)?)?;
    m.add_function(wrap_pyfunction!(run_sa, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
