//! Scenario file schema, validation, and the validated [`Scenario`] that
//! the simulator consumes.
//!
//! Scenario files are TOML. Matrices are nested arrays in row-major order;
//! scalar learning rates expand to `gamma * I`. Validation runs every
//! structural invariant and reports all violations at once, each tagged
//! with the subsystem that owns the rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::laws::AdaptiveLaw;
use crate::matrix::{self, is_spd, max_eigenvalue_symmetric, Matrix};
use crate::models::{
    check_matching_conditions, CommandPrimitive, CommandProfile, NominalGains, PlantModel,
    ReferenceModel, UncertaintyModel,
};
use crate::sim::{governor_command_matrix, Architecture};

/// Hurwitz margin required of `A_r`: all eigenvalue real parts below this.
pub const HURWITZ_MARGIN: f64 = -1e-9;

/// One violated invariant, tagged with the subsystem that owns it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub module: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.module, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// TOML syntax or schema error, with the parser's line/field context.
    Parse(String),
    /// One or more invariants violated; all of them are listed.
    Validation(Vec<Violation>),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Parse(msg) => write!(f, "parse error: {msg}"),
            ScenarioError::Validation(violations) => {
                writeln!(f, "{} invariant violation(s):", violations.len())?;
                for v in violations {
                    writeln!(f, "  {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ScenarioError {}

// ---------------------------------------------------------------------------
// file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixOrName {
    Name(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    /// Accept a non-diagonal `lambda` (checked for invertibility only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_full_lambda: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    pub w_x: Vec<Vec<f64>>,
    pub w_c: Vec<Vec<f64>>,
    pub w_kappa: Vec<f64>,
    /// Regressor bias entry; the scalability harness rescales it.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub a_r: Vec<Vec<f64>>,
    pub b_r: Vec<Vec<f64>>,
    pub x_r0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_feedback: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    /// Lyapunov design matrix; `"identity"` or an explicit matrix.
    #[serde(default = "default_q")]
    pub q: MatrixOrName,
    /// Optional explicit overrides; synthesized by least squares otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_c: Option<Vec<Vec<f64>>>,
}

fn default_q() -> MatrixOrName {
    MatrixOrName::Name("identity".to_string())
}

impl Default for GainsSpec {
    fn default() -> Self {
        Self { q: default_q(), k_x: None, k_c: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Standard,
    SigmaMod,
    EMod,
    FreqLimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub kind: LawKind,
    pub gamma: ScalarOrMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_f: Option<ScalarOrMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_f_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    Plain,
    Clrm,
    Governor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub kind: ArchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_gov: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CommandSpec {
    Step { t_on: f64, level: Vec<f64> },
    Ramp { t0: f64, t1: f64, from: Vec<f64>, to: Vec<f64> },
    Sine {
        amplitude: Vec<f64>,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    pub duration: f64,
    #[serde(default = "default_divergence_bound")]
    pub divergence_bound: f64,
}

fn default_divergence_bound() -> f64 {
    1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub x0: Vec<f64>,
    /// `"zeros"` or an explicit `(n+l+1) x m` matrix.
    #[serde(default = "default_w_hat0")]
    pub w_hat0: MatrixOrName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_hat_f0: Option<MatrixOrName>,
}

fn default_w_hat0() -> MatrixOrName {
    MatrixOrName::Name("zeros".to_string())
}

/// Raw, serde-mapped scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub plant: PlantSpec,
    pub uncertainty: UncertaintySpec,
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub gains: GainsSpec,
    pub law: LawSpec,
    pub architecture: ArchitectureSpec,
    #[serde(default)]
    pub command: Vec<CommandSpec>,
    pub sim: SimSpec,
    pub initial: InitialSpec,
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
}

pub fn serialize_scenario(spec: &ScenarioSpec) -> Result<String, ScenarioError> {
    toml::to_string_pretty(spec).map_err(|e| ScenarioError::Parse(e.to_string()))
}

// ---------------------------------------------------------------------------
// validated scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub duration: f64,
    pub divergence_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x0: Vec<f64>,
    pub w_hat0: Matrix,
    pub w_hat_f0: Option<Matrix>,
}

/// A fully validated closed-loop experiment. Construct through
/// [`Scenario::from_spec`] (or [`Scenario::from_toml_str`]); the fields are
/// public for inspection and for harness-style transformations, but direct
/// mutation bypasses validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantModel,
    pub uncertainty: UncertaintyModel,
    pub reference: ReferenceModel,
    pub gains: NominalGains,
    pub q: Matrix,
    /// Lyapunov solution for `(A_r, Q)`.
    pub p: Matrix,
    pub law: AdaptiveLaw,
    pub architecture: Architecture,
    pub command: CommandProfile,
    pub kappa: f64,
    pub sim: SimSettings,
    pub initial: InitialState,
    /// Precomputed `K_c⁻¹ (BᵀB)⁻¹ Bᵀ` for governor runs.
    pub gov_command_gain: Option<Matrix>,
    /// Non-fatal validation notes (step commands, full lambda, ...).
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn m(&self) -> usize {
        self.plant.m()
    }

    pub fn l(&self) -> usize {
        self.reference.l()
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let spec = parse_scenario_str(text)?;
        Scenario::from_spec(&spec)
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
        build_scenario(spec).map_err(ScenarioError::Validation)
    }

    /// Steps on the integration grid (`duration / dt`, rounded).
    pub fn steps(&self) -> usize {
        (self.sim.duration / self.sim.dt).round() as usize
    }
}

struct Check {
    violations: Vec<Violation>,
    warnings: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { violations: Vec::new(), warnings: Vec::new() }
    }

    fn err(&mut self, module: &'static str, message: String) {
        self.violations.push(Violation { module, message });
    }

    fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    fn matrix(
        &mut self,
        module: &'static str,
        field: &str,
        rows: &[Vec<f64>],
    ) -> Option<Matrix> {
        match Matrix::from_rows(rows) {
            Ok(m) => Some(m),
            Err(e) => {
                self.err(module, format!("{field}: {e}"));
                None
            }
        }
    }

    fn finite_vec(&mut self, module: &'static str, field: &str, v: &[f64]) -> bool {
        if v.iter().all(|x| x.is_finite()) {
            true
        } else {
            self.err(module, format!("{field}: non-finite entry"));
            false
        }
    }
}

fn expand_scalar_or_matrix(
    check: &mut Check,
    module: &'static str,
    field: &str,
    value: &ScalarOrMatrix,
    dim: usize,
) -> Option<Matrix> {
    match value {
        ScalarOrMatrix::Scalar(g) => {
            if !g.is_finite() {
                check.err(module, format!("{field}: non-finite scalar"));
                return None;
            }
            Some(Matrix::identity(dim).scale(*g))
        }
        ScalarOrMatrix::Rows(rows) => {
            let m = check.matrix(module, field, rows)?;
            if m.rows() != dim || m.cols() != dim {
                check.err(
                    module,
                    format!("{field} must be {dim}x{dim}, got {}x{}", m.rows(), m.cols()),
                );
                return None;
            }
            Some(m)
        }
    }
}

fn matrix_or_name(
    check: &mut Check,
    module: &'static str,
    field: &str,
    value: &MatrixOrName,
    named: &str,
    fallback: impl Fn() -> Matrix,
    shape: (usize, usize),
) -> Option<Matrix> {
    let (rows, cols) = shape;
    match value {
        MatrixOrName::Name(s) if s == named => Some(fallback()),
        MatrixOrName::Name(s) => {
            check.err(module, format!("{field}: unknown keyword {s:?} (expected {named:?})"));
            None
        }
        MatrixOrName::Rows(r) => {
            let m = check.matrix(module, field, r)?;
            if m.rows() != rows || m.cols() != cols {
                check.err(
                    module,
                    format!("{field} must be {rows}x{cols}, got {}x{}", m.rows(), m.cols()),
                );
                return None;
            }
            Some(m)
        }
    }
}

fn build_scenario(spec: &ScenarioSpec) -> Result<Scenario, Vec<Violation>> {
    let mut check = Check::new();

    // --- stage 1: matrices exist, dims agree -------------------------------
    let a = check.matrix("system-models", "plant.a", &spec.plant.a);
    let b = check.matrix("system-models", "plant.b", &spec.plant.b);
    let lambda = check.matrix("system-models", "plant.lambda", &spec.plant.lambda);
    let a_r = check.matrix("system-models", "reference.a_r", &spec.reference.a_r);
    let b_r = check.matrix("system-models", "reference.b_r", &spec.reference.b_r);
    let w_x = check.matrix("system-models", "uncertainty.w_x", &spec.uncertainty.w_x);
    let w_c = check.matrix("system-models", "uncertainty.w_c", &spec.uncertainty.w_c);
    check.finite_vec("system-models", "uncertainty.w_kappa", &spec.uncertainty.w_kappa);
    check.finite_vec("system-models", "reference.x_r0", &spec.reference.x_r0);
    check.finite_vec("system-models", "initial.x0", &spec.initial.x0);
    let (Some(a), Some(b), Some(lambda), Some(a_r), Some(b_r), Some(w_x), Some(w_c)) =
        (a, b, lambda, a_r, b_r, w_x, w_c)
    else {
        return Err(check.violations);
    };

    let n = a.rows();
    let m = b.cols();
    let l = b_r.cols();
    let plant = match PlantModel::new(a, b, lambda) {
        Ok(p) => p,
        Err(e) => {
            check.err("system-models", format!("plant: {e}"));
            return Err(check.violations);
        }
    };
    if a_r.rows() != n || a_r.cols() != n {
        check.err(
            "system-models",
            format!("reference.a_r must be {n}x{n}, got {}x{}", a_r.rows(), a_r.cols()),
        );
    }
    if b_r.rows() != n {
        check.err(
            "system-models",
            format!("reference.b_r must have {n} rows, got {}", b_r.rows()),
        );
    }
    if spec.reference.x_r0.len() != n {
        check.err(
            "system-models",
            format!("reference.x_r0 must have length {n}, got {}", spec.reference.x_r0.len()),
        );
    }
    if spec.initial.x0.len() != n {
        check.err(
            "system-models",
            format!("initial.x0 must have length {n}, got {}", spec.initial.x0.len()),
        );
    }
    let uncertainty = UncertaintyModel {
        w_x,
        w_c,
        w_kappa: spec.uncertainty.w_kappa.clone(),
    };
    if let Err(e) = uncertainty.check_dims(n, m, l) {
        check.err("system-models", format!("uncertainty: {e}"));
    }
    if !check.violations.is_empty() {
        return Err(check.violations);
    }

    // --- stage 2: structural invariants ------------------------------------
    match matrix::hurwitz_margin(&a_r) {
        Ok(margin) => {
            if margin >= HURWITZ_MARGIN {
                check.err(
                    "system-models",
                    format!(
                        "reference.a_r is not Hurwitz with margin 1e-9 \
                         (max eigenvalue real part = {margin:.3e})"
                    ),
                );
            }
        }
        Err(e) => check.err("matrix-core", format!("reference.a_r eigenvalues: {e}")),
    }

    if !spec.uncertainty.kappa.is_finite() {
        check.err("system-models", "uncertainty.kappa must be finite".to_string());
    }

    if spec.plant.allow_full_lambda {
        if matrix::invert(&plant.lambda).is_err() {
            check.err("system-models", "plant.lambda is singular".to_string());
        }
        if !plant.lambda_is_diagonal_positive() {
            check.warn(
                "plant.lambda is not diagonal-positive; accepted because \
                 allow_full_lambda is set (invertibility checked only)"
                    .to_string(),
            );
        }
    } else if !plant.lambda_is_diagonal_positive() {
        check.err(
            "system-models",
            "plant.lambda must be diagonal with strictly positive entries \
             (set allow_full_lambda to accept a general invertible matrix)"
                .to_string(),
        );
    }

    if !plant.is_controllable() {
        check.err("system-models", "(A, B) is not controllable".to_string());
    }

    let q = matrix_or_name(
        &mut check,
        "matrix-core",
        "gains.q",
        &spec.gains.q,
        "identity",
        || Matrix::identity(n),
        (n, n),
    );
    if let Some(q) = &q {
        if !is_spd(q) {
            check.err("matrix-core", "gains.q failed the is_spd check".to_string());
        }
    }

    // reference-model feedback gain
    let l_feedback = match &spec.reference.l_feedback {
        Some(rows) => check.matrix("system-models", "reference.l_feedback", rows),
        None => None,
    };
    match spec.architecture.kind {
        ArchKind::Clrm => {
            match &l_feedback {
                Some(lm) => {
                    if lm.rows() != n || lm.cols() != n {
                        check.err(
                            "system-models",
                            format!(
                                "reference.l_feedback must be {n}x{n}, got {}x{}",
                                lm.rows(),
                                lm.cols()
                            ),
                        );
                    } else if !is_spd(lm) {
                        check.err(
                            "system-models",
                            "reference.l_feedback failed the is_spd check".to_string(),
                        );
                    }
                }
                None => check.err(
                    "system-models",
                    "closed-loop reference model requires reference.l_feedback".to_string(),
                ),
            }
        }
        _ => {
            if spec.reference.l_feedback.is_some() {
                check.err(
                    "system-models",
                    "reference.l_feedback is only valid with architecture kind \"clrm\""
                        .to_string(),
                );
            }
        }
    }

    // adaptive law
    let k_dim = n + l + 1;
    let gamma = expand_scalar_or_matrix(&mut check, "adaptive-laws", "law.gamma", &spec.law.gamma, k_dim);
    if let Some(g) = &gamma {
        if !is_spd(g) {
            check.err("adaptive-laws", "law.gamma failed the is_spd check".to_string());
        }
    }
    let mut law: Option<AdaptiveLaw> = None;
    let require = |check: &mut Check, field: &str, present: bool, kind: &str| {
        if !present {
            check.err("adaptive-laws", format!("law.{field} is required for kind \"{kind}\""));
        }
    };
    let forbid = |check: &mut Check, field: &str, present: bool, kind: &str| {
        if present {
            check.err("adaptive-laws", format!("law.{field} is not used by kind \"{kind}\""));
        }
    };
    match spec.law.kind {
        LawKind::Standard => {
            forbid(&mut check, "sigma", spec.law.sigma.is_some(), "standard");
            forbid(&mut check, "sigma_e", spec.law.sigma_e.is_some(), "standard");
            forbid(&mut check, "gamma_f", spec.law.gamma_f.is_some(), "standard");
            forbid(&mut check, "gamma_f_max", spec.law.gamma_f_max.is_some(), "standard");
            if let Some(gamma) = gamma.clone() {
                law = Some(AdaptiveLaw::StandardMrac { gamma });
            }
        }
        LawKind::SigmaMod => {
            require(&mut check, "sigma", spec.law.sigma.is_some(), "sigma-mod");
            forbid(&mut check, "sigma_e", spec.law.sigma_e.is_some(), "sigma-mod");
            forbid(&mut check, "gamma_f", spec.law.gamma_f.is_some(), "sigma-mod");
            forbid(&mut check, "gamma_f_max", spec.law.gamma_f_max.is_some(), "sigma-mod");
            if let Some(sigma) = spec.law.sigma {
                if !sigma.is_finite() || sigma <= 0.0 {
                    check.err("adaptive-laws", format!("law.sigma must be > 0, got {sigma}"));
                } else if let Some(gamma) = gamma.clone() {
                    law = Some(AdaptiveLaw::SigmaMod { gamma, sigma });
                }
            }
        }
        LawKind::EMod => {
            require(&mut check, "sigma_e", spec.law.sigma_e.is_some(), "e-mod");
            forbid(&mut check, "sigma", spec.law.sigma.is_some(), "e-mod");
            forbid(&mut check, "gamma_f", spec.law.gamma_f.is_some(), "e-mod");
            forbid(&mut check, "gamma_f_max", spec.law.gamma_f_max.is_some(), "e-mod");
            if let Some(sigma_e) = spec.law.sigma_e {
                if !sigma_e.is_finite() || sigma_e <= 0.0 {
                    check.err("adaptive-laws", format!("law.sigma_e must be > 0, got {sigma_e}"));
                } else if let Some(gamma) = gamma.clone() {
                    law = Some(AdaptiveLaw::EMod { gamma, sigma_e });
                }
            }
        }
        LawKind::FreqLimited => {
            require(&mut check, "sigma", spec.law.sigma.is_some(), "freq-limited");
            require(&mut check, "gamma_f", spec.law.gamma_f.is_some(), "freq-limited");
            require(&mut check, "gamma_f_max", spec.law.gamma_f_max.is_some(), "freq-limited");
            forbid(&mut check, "sigma_e", spec.law.sigma_e.is_some(), "freq-limited");
            let gamma_f = spec.law.gamma_f.as_ref().and_then(|gf| {
                expand_scalar_or_matrix(&mut check, "adaptive-laws", "law.gamma_f", gf, k_dim)
            });
            if let (Some(sigma), Some(gamma_f), Some(gamma_f_max), Some(gamma)) =
                (spec.law.sigma, gamma_f, spec.law.gamma_f_max, gamma.clone())
            {
                if !sigma.is_finite() || sigma <= 0.0 {
                    check.err("adaptive-laws", format!("law.sigma must be > 0, got {sigma}"));
                }
                if !gamma_f_max.is_finite() || gamma_f_max <= 0.0 {
                    check.err(
                        "adaptive-laws",
                        format!("law.gamma_f_max must be > 0, got {gamma_f_max}"),
                    );
                }
                if !is_spd(&gamma_f) {
                    check.err("adaptive-laws", "law.gamma_f failed the is_spd check".to_string());
                } else {
                    match max_eigenvalue_symmetric(&gamma_f) {
                        Ok(max_ev) => {
                            if max_ev > gamma_f_max {
                                check.err(
                                    "adaptive-laws",
                                    format!(
                                        "max eigenvalue of law.gamma_f ({max_ev:.6}) exceeds \
                                         law.gamma_f_max ({gamma_f_max})"
                                    ),
                                );
                            }
                        }
                        Err(e) => check.err("matrix-core", format!("law.gamma_f: {e}")),
                    }
                }
                law = Some(AdaptiveLaw::FreqLimited { gamma, sigma, gamma_f, gamma_f_max });
            }
        }
    }

    // architecture
    let architecture = match spec.architecture.kind {
        ArchKind::Plain => {
            if spec.architecture.lambda_gov.is_some() {
                check.err(
                    "closed-loop-sim",
                    "architecture.lambda_gov is only valid with kind \"governor\"".to_string(),
                );
            }
            Architecture::PlainReference
        }
        ArchKind::Clrm => {
            if spec.architecture.lambda_gov.is_some() {
                check.err(
                    "closed-loop-sim",
                    "architecture.lambda_gov is only valid with kind \"governor\"".to_string(),
                );
            }
            Architecture::ClosedLoopReference
        }
        ArchKind::Governor => {
            let lambda = spec.architecture.lambda_gov.unwrap_or_else(|| {
                check.err(
                    "closed-loop-sim",
                    "architecture kind \"governor\" requires lambda_gov".to_string(),
                );
                f64::NAN
            });
            if lambda.is_finite() && lambda <= 0.0 {
                check.err(
                    "closed-loop-sim",
                    format!("architecture.lambda_gov must be > 0, got {lambda}"),
                );
            }
            if m != l {
                check.err(
                    "closed-loop-sim",
                    format!(
                        "command governor requires command dimension l ({l}) to equal \
                         input dimension m ({m})"
                    ),
                );
            }
            Architecture::CommandGovernor { lambda }
        }
    };

    // command profile
    for (i, prim) in spec.command.iter().enumerate() {
        let (dim_ok, label) = match prim {
            CommandSpec::Step { t_on, level } => {
                check.warn(format!(
                    "command[{i}] is a step at t={t_on}; step commands are outside the \
                     uniformly-continuous command assumption"
                ));
                check.finite_vec("system-models", &format!("command[{i}].level"), level);
                (level.len() == l, "step")
            }
            CommandSpec::Ramp { t0, t1, from, to } => {
                if t1 <= t0 || !t1.is_finite() || !t0.is_finite() {
                    check.err(
                        "system-models",
                        format!("command[{i}] ramp needs t1 > t0, got t0={t0}, t1={t1}"),
                    );
                }
                check.finite_vec("system-models", &format!("command[{i}].from"), from);
                check.finite_vec("system-models", &format!("command[{i}].to"), to);
                (from.len() == l && to.len() == l, "ramp")
            }
            CommandSpec::Sine { amplitude, frequency_hz, phase } => {
                if !frequency_hz.is_finite() || !phase.is_finite() {
                    check.err(
                        "system-models",
                        format!("command[{i}] sine has non-finite frequency or phase"),
                    );
                }
                check.finite_vec("system-models", &format!("command[{i}].amplitude"), amplitude);
                (amplitude.len() == l, "sine")
            }
        };
        if !dim_ok {
            check.err(
                "system-models",
                format!("command[{i}] ({label}) must have dimension {l}"),
            );
        }
    }

    // sim settings
    if !spec.sim.dt.is_finite() || spec.sim.dt <= 0.0 {
        check.err("closed-loop-sim", format!("sim.dt must be > 0, got {}", spec.sim.dt));
    }
    if !spec.sim.duration.is_finite() || spec.sim.duration <= 0.0 {
        check.err(
            "closed-loop-sim",
            format!("sim.duration must be > 0, got {}", spec.sim.duration),
        );
    }
    if spec.sim.dt > 0.0 && spec.sim.duration > 0.0 {
        let steps = spec.sim.duration / spec.sim.dt;
        if steps < 1.0 || (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            check.err(
                "closed-loop-sim",
                format!(
                    "sim.duration must be an integral number of dt steps \
                     (duration/dt = {steps})"
                ),
            );
        }
    }
    if !spec.sim.divergence_bound.is_finite() || spec.sim.divergence_bound <= 0.0 {
        check.err(
            "closed-loop-sim",
            format!("sim.divergence_bound must be > 0, got {}", spec.sim.divergence_bound),
        );
    }

    // initial weights
    let w_hat0 = matrix_or_name(
        &mut check,
        "adaptive-laws",
        "initial.w_hat0",
        &spec.initial.w_hat0,
        "zeros",
        || Matrix::zeros(k_dim, m),
        (k_dim, m),
    );
    let w_hat_f0 = match &spec.initial.w_hat_f0 {
        Some(value) => {
            if spec.law.kind != LawKind::FreqLimited {
                check.err(
                    "adaptive-laws",
                    "initial.w_hat_f0 is only valid with the freq-limited law".to_string(),
                );
                None
            } else {
                matrix_or_name(
                    &mut check,
                    "adaptive-laws",
                    "initial.w_hat_f0",
                    value,
                    "zeros",
                    || Matrix::zeros(k_dim, m),
                    (k_dim, m),
                )
            }
        }
        None => None,
    };

    // --- stage 3: synthesis -------------------------------------------------
    let reference = ReferenceModel {
        a_r,
        b_r,
        l_feedback: if spec.architecture.kind == ArchKind::Clrm { l_feedback } else { None },
        x_r0: spec.reference.x_r0.clone(),
    };
    let gains = solve_gains_or(
        &mut check,
        &plant,
        &reference,
        spec.gains.k_x.as_deref(),
        spec.gains.k_c.as_deref(),
    );

    let p = match &q {
        Some(q) if check.violations.is_empty() => match matrix::solve_lyapunov(&reference.a_r, q) {
            Ok(p) => Some(p),
            Err(e) => {
                check.err("matrix-core", format!("lyapunov solve failed: {e}"));
                None
            }
        },
        _ => None,
    };

    let gov_command_gain = match (&architecture, &gains) {
        (Architecture::CommandGovernor { .. }, Some(g)) if m == l => {
            // invertibility of K_c to a 1e-10 condition tolerance
            match matrix::invert(&g.k_c) {
                Ok(kci) => {
                    let norm = |mat: &Matrix| -> f64 {
                        (0..mat.cols())
                            .map(|j| (0..mat.rows()).map(|i| mat.at(i, j).abs()).sum::<f64>())
                            .fold(0.0, f64::max)
                    };
                    let cond = norm(&g.k_c) * norm(&kci);
                    if 1.0 / cond < 1e-10 {
                        check.err(
                            "closed-loop-sim",
                            format!("gains.k_c is too ill-conditioned for the governor (cond = {cond:.3e})"),
                        );
                        None
                    } else {
                        match governor_command_matrix(&g.k_c, &plant.b) {
                            Ok(gain) => Some(gain),
                            Err(e) => {
                                check.err("closed-loop-sim", format!("governor gain: {e}"));
                                None
                            }
                        }
                    }
                }
                Err(_) => {
                    check.err("closed-loop-sim", "gains.k_c is singular (kc-singular)".to_string());
                    None
                }
            }
        }
        _ => None,
    };

    if !check.violations.is_empty() {
        return Err(check.violations);
    }

    let duration = spec.sim.duration;
    Ok(Scenario {
        name: spec.name.clone(),
        command: CommandProfile::new(
            spec.command.iter().map(command_from_spec).collect(),
            l,
            duration,
        ),
        plant,
        uncertainty,
        reference,
        gains: gains.expect("no violations implies gains"),
        q: q.expect("no violations implies q"),
        p: p.expect("no violations implies p"),
        law: law.expect("no violations implies law"),
        architecture,
        kappa: spec.uncertainty.kappa,
        sim: SimSettings {
            dt: spec.sim.dt,
            duration,
            divergence_bound: spec.sim.divergence_bound,
        },
        initial: InitialState {
            x0: spec.initial.x0.clone(),
            w_hat0: w_hat0.expect("no violations implies w_hat0"),
            w_hat_f0,
        },
        gov_command_gain,
        warnings: check.warnings,
    })
}

fn command_from_spec(spec: &CommandSpec) -> CommandPrimitive {
    match spec {
        CommandSpec::Step { t_on, level } => {
            CommandPrimitive::Step { t_on: *t_on, level: level.clone() }
        }
        CommandSpec::Ramp { t0, t1, from, to } => {
            CommandPrimitive::Ramp { t0: *t0, t1: *t1, from: from.clone(), to: to.clone() }
        }
        CommandSpec::Sine { amplitude, frequency_hz, phase } => CommandPrimitive::Sine {
            amplitude: amplitude.clone(),
            frequency_hz: *frequency_hz,
            phase: *phase,
        },
    }
}

impl Check {
    fn gains_override(
        &mut self,
        field: &str,
        rows: Option<&[Vec<f64>]>,
        want_rows: usize,
        want_cols: usize,
    ) -> Option<Matrix> {
        let rows = rows?;
        let m = self.matrix("system-models", field, rows)?;
        if m.rows() != want_rows || m.cols() != want_cols {
            self.err(
                "system-models",
                format!(
                    "{field} must be {want_rows}x{want_cols}, got {}x{}",
                    m.rows(),
                    m.cols()
                ),
            );
            return None;
        }
        Some(m)
    }
}

/// Synthesizes the nominal gains, honoring explicit overrides, and checks
/// the matching conditions either way.
fn solve_gains_or(
    check: &mut Check,
    plant: &PlantModel,
    reference: &ReferenceModel,
    k_x_over: Option<&[Vec<f64>]>,
    k_c_over: Option<&[Vec<f64>]>,
) -> Option<NominalGains> {
    let m = plant.m();
    let n = plant.n();
    let l = reference.l();
    let k_x = check.gains_override("gains.k_x", k_x_over, m, n);
    let k_c = check.gains_override("gains.k_c", k_c_over, m, l);
    match (k_x_over.is_some(), k_c_over.is_some()) {
        (true, true) => {
            let gains = NominalGains { k_x: k_x?, k_c: k_c? };
            if let Err(e) = check_matching_conditions(plant, reference, &gains) {
                check.err("system-models", format!("{e}"));
                return None;
            }
            Some(gains)
        }
        (false, false) => match crate::models::synthesize_nominal_gains(plant, reference) {
            Ok(g) => Some(g),
            Err(e) => {
                check.err("system-models", format!("gain synthesis failed: {e}"));
                None
            }
        },
        _ => {
            check.err(
                "system-models",
                "provide both gains.k_x and gains.k_c or neither".to_string(),
            );
            None
        }
    }
}
