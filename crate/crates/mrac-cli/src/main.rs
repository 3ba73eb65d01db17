//! `mrac` — scenario validation, closed-loop simulation, and scalability
//! checking from the command line.
//!
//! Exit codes: 0 success/pass, 1 validation or scalability failure,
//! 2 diverged simulation, 3 I/O error, 4 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mrac_sim::report::{
    run_report_json, scalability_csv, scalability_report_json, trajectory_csv,
};
use mrac_sim::scaling::{run_scalability_check_with_workers, ScaleError};
use mrac_sim::scenario::{parse_scenario_str, Scenario, ScenarioError, ScenarioSpec};
use mrac_sim::sim::{integrate, SimError};

const TOOL_NAME: &str = "mrac";
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = TOOL_NAME,
    version,
    about = "Simulate MRAC architectures and check command/learning-rate scaling laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against every structural invariant.
    Validate {
        /// Scenario file (TOML).
        file: PathBuf,
    },
    /// Integrate a scenario and write trajectory.csv + report.json.
    Run {
        file: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run nominal and alpha-scaled simulations and report deviations.
    ///
    /// Per-alpha runs fan out across threads; set MRAC_WORKERS to cap the
    /// worker count.
    CheckScalability {
        file: PathBuf,
        /// Scale factors, e.g. --alpha 0.5 2 5 -- -2 (or --alpha=-2).
        #[arg(long = "alpha", num_args = 1.., value_delimiter = ',', allow_negative_numbers = true, required = true)]
        alpha: Vec<f64>,
        /// Deviation tolerance for the pass/fail verdict.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the supported architecture / adaptive-law combinations.
    ListArchitectures,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not usage errors
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Run { file, out } => cmd_run(&file, &out),
        Command::CheckScalability { file, alpha, tolerance, out } => {
            cmd_check_scalability(&file, &alpha, tolerance, &out)
        }
        Command::ListArchitectures => cmd_list_architectures(),
    };
    ExitCode::from(code)
}

fn load_spec(path: &Path) -> Result<ScenarioSpec, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    parse_scenario_str(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_CHECK_FAILED
    })
}

fn build_scenario(path: &Path, spec: &ScenarioSpec) -> Result<Scenario, u8> {
    match Scenario::from_spec(spec) {
        Ok(scn) => {
            for w in &scn.warnings {
                eprintln!("warning: {w}");
            }
            Ok(scn)
        }
        Err(ScenarioError::Validation(violations)) => {
            eprintln!("{}: {} invariant violation(s):", path.display(), violations.len());
            for v in &violations {
                eprintln!("  {v}");
            }
            Err(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Err(EXIT_CHECK_FAILED)
        }
    }
}

fn cmd_validate(path: &Path) -> u8 {
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match build_scenario(path, &spec) {
        Ok(scn) => {
            println!(
                "OK: {} (n={}, m={}, l={}, law={}, architecture={})",
                path.display(),
                scn.n(),
                scn.m(),
                scn.l(),
                scn.law.kind_name(),
                scn.architecture.kind_name()
            );
            0
        }
        Err(code) => code,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), u8> {
    std::fs::create_dir_all(dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", dir.display());
        EXIT_IO
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_IO
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_run(path: &Path, out: &Path) -> u8 {
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let scn = match build_scenario(path, &spec) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let traj = match integrate(&scn) {
        Ok(t) => t,
        Err(SimError::Diverged { t, norm }) => {
            eprintln!("diverged: state norm {norm:.3e} at t = {t:.6}");
            return EXIT_DIVERGED;
        }
        Err(e) => {
            eprintln!("simulation error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    let csv = trajectory_csv(&traj, &scn);
    let json = run_report_json(&spec, &scn, &traj, TOOL_NAME, TOOL_VERSION);
    if let Err(code) = write_file(out, "trajectory.csv", &csv) {
        return code;
    }
    if let Err(code) = write_file(out, "report.json", &json) {
        return code;
    }
    println!(
        "{} rows, sup|e| = {:.6e}, final |e| = {:.6e}",
        traj.len(),
        traj.sup_e_inf(),
        mrac_sim::matrix::vec_inf_norm(traj.e.last().expect("non-empty"))
    );
    0
}

fn worker_count(alphas: usize) -> usize {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let requested = std::env::var("MRAC_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(default);
    requested.min(alphas.max(1))
}

fn cmd_check_scalability(path: &Path, alphas: &[f64], tolerance: f64, out: &Path) -> u8 {
    if alphas.iter().any(|a| *a == 0.0 || !a.is_finite()) {
        eprintln!("usage error: alpha must be nonzero and finite");
        return EXIT_USAGE;
    }
    if !tolerance.is_finite() || tolerance <= 0.0 {
        eprintln!("usage error: tolerance must be positive");
        return EXIT_USAGE;
    }
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let scn = match build_scenario(path, &spec) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if matches!(scn.law, mrac_sim::laws::AdaptiveLaw::EMod { .. })
        && alphas.iter().any(|a| *a < 0.0)
    {
        eprintln!(
            "usage error: the e-modification scaling rule (sigma_e / alpha) is only \
             defined for alpha > 0; drop the negative alpha values"
        );
        return EXIT_USAGE;
    }
    let workers = worker_count(alphas.len());
    let report = match run_scalability_check_with_workers(&scn, alphas, tolerance, workers) {
        Ok(r) => r,
        Err(ScaleError::Sim(SimError::Diverged { t, norm })) => {
            eprintln!("nominal run diverged: state norm {norm:.3e} at t = {t:.6}");
            return EXIT_DIVERGED;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    println!("alpha      state_dev    weight_dev   input_dev    verdict");
    for c in &report.checks {
        match (&c.deviations, &c.error) {
            (Some(d), _) => println!(
                "{:<10} {:<12.3e} {:<12.3e} {:<12.3e} {}",
                c.alpha,
                d.state,
                d.weight,
                d.input,
                if c.pass { "pass" } else { "FAIL" }
            ),
            (None, Some(err)) => println!("{:<10} {err} -> FAIL", c.alpha),
            (None, None) => unreachable!("check without deviations or error"),
        }
    }
    let csv = scalability_csv(&report);
    let json = scalability_report_json(&spec, &report, TOOL_NAME, TOOL_VERSION);
    if let Err(code) = write_file(out, "scalability.csv", &csv) {
        return code;
    }
    if let Err(code) = write_file(out, "report.json", &json) {
        return code;
    }
    if report.pass {
        println!("PASS: all deviations within {tolerance:.1e}");
        0
    } else {
        println!("FAIL: deviations exceed {tolerance:.1e}");
        EXIT_CHECK_FAILED
    }
}

fn cmd_list_architectures() -> u8 {
    println!("law kinds ([law] kind = ...):");
    println!("  standard      gradient adaptation, dW = Gamma omega e'PB");
    println!("  sigma-mod     adds constant damping        - sigma W");
    println!("  e-mod         adds error-weighted damping  - sigma_e |e| W   (scaling needs alpha > 0)");
    println!("  freq-limited  damps toward a low-pass copy - sigma (W - W_f)");
    println!();
    println!("architectures ([architecture] kind = ...):");
    println!("  plain      reference model x_r' = A_r x_r + B_r c");
    println!("  clrm       closed-loop reference model, adds L e feedback (reference.l_feedback)");
    println!("  governor   command governor, adds c_g from governor state (lambda_gov)");
    0
}
