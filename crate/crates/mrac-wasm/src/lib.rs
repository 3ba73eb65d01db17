//! Browser bindings for the MRAC simulator: run a scenario, overlay
//! alpha-scaled runs against the nominal response, and sweep the command
//! governor gain. Each export takes scenario TOML and returns a JSON
//! document ready for plotting; errors come back as strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mrac_sim::matrix::vec_inf_norm;
use mrac_sim::scaling::{compare_trajectories, scale_scenario};
use mrac_sim::scenario::{parse_scenario_str, Scenario};
use mrac_sim::sim::{integrate, Architecture, Trajectory};

const BUNDLED: &[(&str, &str)] = &[
    ("standard", include_str!("../../../scenarios/standard.toml")),
    ("sigma_mod", include_str!("../../../scenarios/sigma_mod.toml")),
    ("e_mod", include_str!("../../../scenarios/e_mod.toml")),
    ("freq_limited", include_str!("../../../scenarios/freq_limited.toml")),
    ("clrm", include_str!("../../../scenarios/clrm.toml")),
    ("governor", include_str!("../../../scenarios/governor.toml")),
    ("zero_uncertainty", include_str!("../../../scenarios/zero_uncertainty.toml")),
];

fn load(toml_text: &str) -> Result<Scenario, String> {
    Scenario::from_toml_str(toml_text).map_err(|e| e.to_string())
}

fn stride_of(len: usize, stride: usize) -> usize {
    stride.max(1).min(len.max(1))
}

fn decimate(series: &[f64], stride: usize) -> Vec<f64> {
    series.iter().step_by(stride).copied().collect()
}

/// Per-component state series extracted from a trajectory, decimated.
fn component_series(traj: &Trajectory, stride: usize, pick: impl Fn(usize) -> Vec<f64>) -> Vec<Vec<f64>> {
    let count = pick(0).len();
    let mut out = vec![Vec::with_capacity(traj.len() / stride + 1); count];
    for k in (0..traj.len()).step_by(stride) {
        let values = pick(k);
        for (c, v) in values.into_iter().enumerate() {
            out[c].push(v);
        }
    }
    out
}

#[derive(Serialize)]
struct SimulateOut {
    name: String,
    law: &'static str,
    architecture: &'static str,
    dt: f64,
    times: Vec<f64>,
    x: Vec<Vec<f64>>,
    x_r: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    u_ad: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    e_norm: Vec<f64>,
    sup_e: f64,
    warnings: Vec<String>,
}

fn simulate_impl(toml_text: &str, stride: usize) -> Result<String, String> {
    let scn = load(toml_text)?;
    let traj = integrate(&scn).map_err(|e| e.to_string())?;
    let s = stride_of(traj.len(), stride);
    let out = SimulateOut {
        name: scn.name.clone(),
        law: scn.law.kind_name(),
        architecture: scn.architecture.kind_name(),
        dt: traj.dt,
        times: decimate(&traj.times, s),
        x: component_series(&traj, s, |k| traj.states[k].x.clone()),
        x_r: component_series(&traj, s, |k| traj.states[k].x_r.clone()),
        u: component_series(&traj, s, |k| traj.u[k].clone()),
        u_ad: component_series(&traj, s, |k| traj.u_ad[k].clone()),
        c: component_series(&traj, s, |k| traj.c_total[k].clone()),
        e_norm: (0..traj.len()).step_by(s).map(|k| vec_inf_norm(&traj.e[k])).collect(),
        sup_e: traj.sup_e_inf(),
        warnings: scn.warnings.clone(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ScaledEntry {
    alpha: f64,
    state_deviation: Option<f64>,
    weight_deviation: Option<f64>,
    input_deviation: Option<f64>,
    pass: bool,
    error: Option<String>,
    /// First state component of the scaled run divided by alpha; collapses
    /// onto the nominal curve exactly when the scaling law holds.
    x1_over_alpha: Vec<f64>,
}

#[derive(Serialize)]
struct ScalabilityOut {
    tolerance: f64,
    times: Vec<f64>,
    x1_nominal: Vec<f64>,
    entries: Vec<ScaledEntry>,
    pass: bool,
}

fn scalability_impl(toml_text: &str, alphas: &str, tolerance: f64, stride: usize) -> Result<String, String> {
    let scn = load(toml_text)?;
    let alphas: Vec<f64> = alphas
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad alpha {s:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if alphas.is_empty() {
        return Err("no alpha values supplied".to_string());
    }
    if alphas.iter().any(|a| *a == 0.0 || !a.is_finite()) {
        return Err("alpha must be nonzero and finite".to_string());
    }
    let base = integrate(&scn).map_err(|e| e.to_string())?;
    let s = stride_of(base.len(), stride);
    let mut entries = Vec::new();
    for &alpha in &alphas {
        match scale_scenario(&scn, alpha)
            .and_then(|scaled| integrate(&scaled).map_err(mrac_sim::scaling::ScaleError::Sim))
        {
            Ok(traj) => {
                let dev = compare_trajectories(&base, &traj, alpha).map_err(|e| e.to_string())?;
                entries.push(ScaledEntry {
                    alpha,
                    state_deviation: Some(dev.state),
                    weight_deviation: Some(dev.weight),
                    input_deviation: Some(dev.input),
                    pass: dev.max() <= tolerance,
                    error: None,
                    x1_over_alpha: (0..traj.len())
                        .step_by(s)
                        .map(|k| traj.states[k].x[0] / alpha)
                        .collect(),
                });
            }
            Err(e) => entries.push(ScaledEntry {
                alpha,
                state_deviation: None,
                weight_deviation: None,
                input_deviation: None,
                pass: false,
                error: Some(e.to_string()),
                x1_over_alpha: Vec::new(),
            }),
        }
    }
    let out = ScalabilityOut {
        tolerance,
        times: decimate(&base.times, s),
        x1_nominal: (0..base.len()).step_by(s).map(|k| base.states[k].x[0]).collect(),
        pass: entries.iter().all(|e| e.pass),
        entries,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct GovernorRun {
    lambda: f64,
    sup_tracking: f64,
    tracking_norm: Vec<f64>,
}

#[derive(Serialize)]
struct GovernorOut {
    times: Vec<f64>,
    runs: Vec<GovernorRun>,
}

fn governor_sweep_impl(toml_text: &str, lambdas: &str, stride: usize) -> Result<String, String> {
    let spec = parse_scenario_str(toml_text).map_err(|e| e.to_string())?;
    let probe = Scenario::from_spec(&spec).map_err(|e| e.to_string())?;
    if !matches!(probe.architecture, Architecture::CommandGovernor { .. }) {
        return Err("governor sweep needs architecture kind = \"governor\"".to_string());
    }
    let lambdas: Vec<f64> = lambdas
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad lambda {s:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err("lambda values must be positive".to_string());
    }
    let mut times = Vec::new();
    let mut runs = Vec::new();
    for &lambda in &lambdas {
        let mut spec = spec.clone();
        spec.architecture.lambda_gov = Some(lambda);
        let scn = Scenario::from_spec(&spec).map_err(|e| e.to_string())?;
        let traj = integrate(&scn).map_err(|e| format!("lambda {lambda}: {e}"))?;
        let s = stride_of(traj.len(), stride);
        if times.is_empty() {
            times = decimate(&traj.times, s);
        }
        let tracking: Vec<f64> = (0..traj.len())
            .step_by(s)
            .map(|k| {
                let x = &traj.states[k].x;
                let xrd = traj.x_r_desired(k).expect("governor run records x_r_des");
                (0..x.len()).map(|i| (x[i] - xrd[i]).abs()).fold(0.0, f64::max)
            })
            .collect();
        let sup = (0..traj.len())
            .map(|k| {
                let x = &traj.states[k].x;
                let xrd = traj.x_r_desired(k).expect("governor run records x_r_des");
                (0..x.len()).map(|i| (x[i] - xrd[i]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        runs.push(GovernorRun { lambda, sup_tracking: sup, tracking_norm: tracking });
    }
    serde_json::to_string(&GovernorOut { times, runs }).map_err(|e| e.to_string())
}

fn bundled_scenario_impl(kind: &str) -> Result<String, String> {
    BUNDLED
        .iter()
        .find(|(name, _)| *name == kind)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| {
            let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
            format!("unknown scenario {kind:?}; bundled: {names:?}")
        })
}

/// Run one scenario and return the plot series as JSON.
#[wasm_bindgen]
pub fn simulate(toml_text: &str, stride: usize) -> Result<String, JsValue> {
    simulate_impl(toml_text, stride).map_err(|e| JsValue::from_str(&e))
}

/// Run the nominal scenario plus alpha-scaled variants (`alphas` is a
/// comma- or space-separated list) and report deviations.
#[wasm_bindgen]
pub fn scalability(toml_text: &str, alphas: &str, tolerance: f64, stride: usize) -> Result<String, JsValue> {
    scalability_impl(toml_text, alphas, tolerance, stride).map_err(|e| JsValue::from_str(&e))
}

/// Sweep the command-governor gain and report tracking of the desired
/// reference model.
#[wasm_bindgen]
pub fn governor_sweep(toml_text: &str, lambdas: &str, stride: usize) -> Result<String, JsValue> {
    governor_sweep_impl(toml_text, lambdas, stride).map_err(|e| JsValue::from_str(&e))
}

/// TOML text of a bundled scenario.
#[wasm_bindgen]
pub fn bundled_scenario(kind: &str) -> Result<String, JsValue> {
    bundled_scenario_impl(kind).map_err(|e| JsValue::from_str(&e))
}

/// Names of the bundled scenarios, comma separated.
#[wasm_bindgen]
pub fn bundled_names() -> String {
    BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(",")
}
