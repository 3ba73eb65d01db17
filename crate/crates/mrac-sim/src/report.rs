//! Trajectory CSV and machine-readable report documents.
//!
//! Numeric CSV fields use Rust's shortest round-trip float formatting, so
//! a downstream tool that parses the file reproduces the in-memory doubles
//! exactly.

use std::fmt::Write as _;

use serde::Serialize;

use crate::scaling::ScalabilityReport;
use crate::scenario::{Scenario, ScenarioSpec};
use crate::sim::Trajectory;

/// CSV header for a scenario's trajectory: `t`, plant state, reference
/// state, tracking error, control input, adaptive input, the adaptive
/// weights row-major as `w<row>_<col>` (plus `wf...` for the filtered
/// copy), governor columns when present, and the total command.
pub fn trajectory_csv_header(scn: &Scenario) -> String {
    let n = scn.n();
    let m = scn.m();
    let l = scn.l();
    let k = n + l + 1;
    let mut cols: Vec<String> = vec!["t".to_string()];
    let series = |cols: &mut Vec<String>, prefix: &str, count: usize| {
        for i in 1..=count {
            cols.push(format!("{prefix}{i}"));
        }
    };
    series(&mut cols, "x", n);
    series(&mut cols, "xr", n);
    series(&mut cols, "e", n);
    series(&mut cols, "u", m);
    series(&mut cols, "uad", m);
    for i in 1..=k {
        for j in 1..=m {
            cols.push(format!("w{i}_{j}"));
        }
    }
    if scn.law.uses_filter() {
        for i in 1..=k {
            for j in 1..=m {
                cols.push(format!("wf{i}_{j}"));
            }
        }
    }
    if matches!(scn.architecture, crate::sim::Architecture::CommandGovernor { .. }) {
        series(&mut cols, "xi", n);
        series(&mut cols, "xrd", n);
    }
    series(&mut cols, "c", l);
    cols.join(",")
}

/// Serializes a trajectory; one row per integration step.
pub fn trajectory_csv(traj: &Trajectory, scn: &Scenario) -> String {
    let mut out = String::with_capacity(traj.len() * 128);
    out.push_str(&trajectory_csv_header(scn));
    out.push('\n');
    for k in 0..traj.len() {
        let state = &traj.states[k];
        let _ = write!(out, "{}", traj.times[k]);
        let mut push = |vals: &[f64]| {
            for v in vals {
                let _ = write!(out, ",{v}");
            }
        };
        push(&state.x);
        push(&state.x_r);
        push(&traj.e[k]);
        push(&traj.u[k]);
        push(&traj.u_ad[k]);
        push(state.weights.w_hat.data());
        if let Some(wf) = &state.weights.w_hat_f {
            push(wf.data());
        }
        if let Some(xi) = &state.xi {
            push(xi);
        }
        if let Some(xrd) = &state.x_r_des {
            push(xrd);
        }
        push(&traj.c_total[k]);
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct ToolInfo {
    name: &'static str,
    version: String,
}

fn tool_info(tool_name: &'static str, tool_version: &str) -> ToolInfo {
    ToolInfo { name: tool_name, version: tool_version.to_string() }
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    tool: ToolInfo,
    kind: &'static str,
    scenario: &'a ScenarioSpec,
    warnings: &'a [String],
    dt: f64,
    duration: f64,
    rows: usize,
    sup_e_inf: f64,
    final_e_inf: f64,
    sup_u_ad_inf: f64,
    diverged: bool,
}

/// JSON summary for a single simulation run, echoing the scenario.
pub fn run_report_json(
    spec: &ScenarioSpec,
    scn: &Scenario,
    traj: &Trajectory,
    tool_name: &'static str,
    tool_version: &str,
) -> String {
    let report = RunReport {
        tool: tool_info(tool_name, tool_version),
        kind: "run",
        scenario: spec,
        warnings: &scn.warnings,
        dt: scn.sim.dt,
        duration: scn.sim.duration,
        rows: traj.len(),
        sup_e_inf: traj.sup_e_inf(),
        final_e_inf: crate::matrix::vec_inf_norm(traj.e.last().expect("non-empty")),
        sup_u_ad_inf: traj.sup_u_ad_inf(),
        diverged: false,
    };
    serde_json::to_string_pretty(&report).expect("report serializes")
}

#[derive(Debug, Serialize)]
struct AlphaEntry {
    alpha: f64,
    state_deviation: Option<f64>,
    weight_deviation: Option<f64>,
    input_deviation: Option<f64>,
    ref_state_deviation: Option<f64>,
    command_deviation: Option<f64>,
    pass: bool,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ScalabilityJson<'a> {
    tool: ToolInfo,
    kind: &'static str,
    scenario: &'a ScenarioSpec,
    tolerance: f64,
    entries: Vec<AlphaEntry>,
    pass: bool,
}

fn alpha_entries(report: &ScalabilityReport) -> Vec<AlphaEntry> {
    report
        .checks
        .iter()
        .map(|c| AlphaEntry {
            alpha: c.alpha,
            state_deviation: c.deviations.map(|d| d.state),
            weight_deviation: c.deviations.map(|d| d.weight),
            input_deviation: c.deviations.map(|d| d.input),
            ref_state_deviation: c.deviations.map(|d| d.ref_state),
            command_deviation: c.deviations.map(|d| d.command),
            pass: c.pass,
            error: c.error.clone(),
        })
        .collect()
}

/// JSON summary for a scalability check.
pub fn scalability_report_json(
    spec: &ScenarioSpec,
    report: &ScalabilityReport,
    tool_name: &'static str,
    tool_version: &str,
) -> String {
    let doc = ScalabilityJson {
        tool: tool_info(tool_name, tool_version),
        kind: "scalability",
        scenario: spec,
        tolerance: report.tolerance,
        entries: alpha_entries(report),
        pass: report.pass,
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

/// Per-alpha deviation table as CSV.
pub fn scalability_csv(report: &ScalabilityReport) -> String {
    let mut out = String::from(
        "alpha,state_deviation,weight_deviation,input_deviation,ref_state_deviation,command_deviation,pass,error\n",
    );
    for c in &report.checks {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.alpha,
            fmt(c.deviations.map(|d| d.state)),
            fmt(c.deviations.map(|d| d.weight)),
            fmt(c.deviations.map(|d| d.input)),
            fmt(c.deviations.map(|d| d.ref_state)),
            fmt(c.deviations.map(|d| d.command)),
            c.pass,
            c.error.as_deref().unwrap_or(""),
        );
    }
    out
}
