//! The scalability harness: transform a scenario for a command scale
//! `alpha`, run nominal/scaled pairs, and report how far the scaled
//! trajectories deviate from the prediction (states and inputs scale by
//! `alpha`, adaptive weights stay invariant).
//!
//! The transformation rule: command and initial conditions scale by
//! `alpha`, the regressor bias `kappa` scales by `alpha`, the learning
//! rate becomes `gamma / alpha^2`, and for the e-modification law
//! `sigma_e` becomes `sigma_e / alpha` (which restricts that law to
//! `alpha > 0`). Every other gain — `sigma`, `gamma_f`, `L`, the governor
//! gain, `Q`, `P` — is left untouched.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::laws::AdaptiveLaw;
use crate::matrix::vec_scale;
use crate::scenario::Scenario;
use crate::sim::{integrate, SimError, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleError {
    AlphaZero,
    /// `sigma_e / alpha` flips the damping sign for negative `alpha`, so
    /// e-modification scaling is only defined for `alpha > 0`.
    EModNegativeAlpha,
    EmptyAlphas,
    /// Trajectories compared on different time grids.
    GridMismatch,
    Sim(SimError),
}

impl fmt::Display for ScaleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleError::AlphaZero => write!(f, "alpha-zero: the scale factor must be nonzero"),
            ScaleError::EModNegativeAlpha => write!(
                f,
                "emod-negative-alpha: e-modification scaling requires alpha > 0"
            ),
            ScaleError::EmptyAlphas => write!(f, "no alpha values supplied"),
            ScaleError::GridMismatch => write!(f, "trajectory time grids differ"),
            ScaleError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScaleError {}

impl From<SimError> for ScaleError {
    fn from(e: SimError) -> Self {
        ScaleError::Sim(e)
    }
}

/// Normalized sup-deviations between a scaled run and the scaled nominal
/// prediction. Each is `sup_t max-entry |actual - predicted|` over
/// `1 + sup_t max-entry |predicted|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviations {
    /// Plant state `x` against `alpha * x_nominal`.
    pub state: f64,
    /// Reference state(s) against `alpha * x_r_nominal` (includes the
    /// governor's desired reference when present).
    pub ref_state: f64,
    /// Adaptive weights against the nominal weights (no `alpha`).
    pub weight: f64,
    /// Control input `u` against `alpha * u_nominal`.
    pub input: f64,
    /// Total command against `alpha * c_nominal` (checks the governor's
    /// contribution scales too).
    pub command: f64,
}

impl Deviations {
    pub fn max(&self) -> f64 {
        self.state
            .max(self.ref_state)
            .max(self.weight)
            .max(self.input)
            .max(self.command)
    }
}

/// Outcome for a single `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCheck {
    pub alpha: f64,
    pub deviations: Option<Deviations>,
    /// Populated when the scaled run failed (e.g. diverged).
    pub error: Option<String>,
    pub pass: bool,
}

/// Pass/fail summary across all requested scale factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityReport {
    pub tolerance: f64,
    pub checks: Vec<AlphaCheck>,
    pub pass: bool,
}

/// Deep-transforms a validated scenario per the scaling rule. The nominal
/// scenario is left untouched; initial adaptive weights, the governor
/// state, and all robustness gains carry over unchanged.
pub fn scale_scenario(nominal: &Scenario, alpha: f64) -> Result<Scenario, ScaleError> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(ScaleError::AlphaZero);
    }
    if matches!(nominal.law, AdaptiveLaw::EMod { .. }) && alpha < 0.0 {
        return Err(ScaleError::EModNegativeAlpha);
    }
    let mut scaled = nominal.clone();
    scaled.command.scale = nominal.command.scale * alpha;
    scaled.kappa = nominal.kappa * alpha;
    scaled.initial.x0 = vec_scale(&nominal.initial.x0, alpha);
    scaled.reference.x_r0 = vec_scale(&nominal.reference.x_r0, alpha);
    let alpha_sq = alpha * alpha;
    scaled.law = match &nominal.law {
        AdaptiveLaw::StandardMrac { gamma } => {
            AdaptiveLaw::StandardMrac { gamma: gamma.div_scalar(alpha_sq) }
        }
        AdaptiveLaw::SigmaMod { gamma, sigma } => {
            AdaptiveLaw::SigmaMod { gamma: gamma.div_scalar(alpha_sq), sigma: *sigma }
        }
        AdaptiveLaw::EMod { gamma, sigma_e } => AdaptiveLaw::EMod {
            gamma: gamma.div_scalar(alpha_sq),
            sigma_e: sigma_e / alpha,
        },
        AdaptiveLaw::FreqLimited { gamma, sigma, gamma_f, gamma_f_max } => {
            AdaptiveLaw::FreqLimited {
                gamma: gamma.div_scalar(alpha_sq),
                sigma: *sigma,
                gamma_f: gamma_f.clone(),
                gamma_f_max: *gamma_f_max,
            }
        }
    };
    Ok(scaled)
}

fn sup_pair(num: &mut f64, den: &mut f64, actual: f64, predicted: f64) {
    *num = num.max((actual - predicted).abs());
    *den = den.max(predicted.abs());
}

/// Deviation metrics between a nominal trajectory `a` and a run scaled by
/// `alpha`, `b`. Requires identical time grids.
pub fn compare_trajectories(
    a: &Trajectory,
    b: &Trajectory,
    alpha: f64,
) -> Result<Deviations, ScaleError> {
    if a.len() != b.len() || a.dt != b.dt || a.times != b.times {
        return Err(ScaleError::GridMismatch);
    }
    let (mut sn, mut sd) = (0.0, 0.0); // state
    let (mut rn, mut rd) = (0.0, 0.0); // reference state(s)
    let (mut wn, mut wd) = (0.0, 0.0); // weights
    let (mut un, mut ud) = (0.0, 0.0); // input
    let (mut cn, mut cd) = (0.0, 0.0); // command
    for k in 0..a.len() {
        let (sa, sb) = (&a.states[k], &b.states[k]);
        for i in 0..sa.x.len() {
            sup_pair(&mut sn, &mut sd, sb.x[i], alpha * sa.x[i]);
            sup_pair(&mut rn, &mut rd, sb.x_r[i], alpha * sa.x_r[i]);
        }
        if let (Some(da), Some(db)) = (&sa.x_r_des, &sb.x_r_des) {
            for i in 0..da.len() {
                sup_pair(&mut rn, &mut rd, db[i], alpha * da[i]);
            }
        }
        let (wa, wb) = (sa.weights.w_hat.data(), sb.weights.w_hat.data());
        for i in 0..wa.len() {
            sup_pair(&mut wn, &mut wd, wb[i], wa[i]);
        }
        if let (Some(fa), Some(fb)) = (&sa.weights.w_hat_f, &sb.weights.w_hat_f) {
            for i in 0..fa.data().len() {
                sup_pair(&mut wn, &mut wd, fb.data()[i], fa.data()[i]);
            }
        }
        for i in 0..a.u[k].len() {
            sup_pair(&mut un, &mut ud, b.u[k][i], alpha * a.u[k][i]);
        }
        for i in 0..a.c_total[k].len() {
            sup_pair(&mut cn, &mut cd, b.c_total[k][i], alpha * a.c_total[k][i]);
        }
    }
    Ok(Deviations {
        state: sn / (1.0 + sd),
        ref_state: rn / (1.0 + rd),
        weight: wn / (1.0 + wd),
        input: un / (1.0 + ud),
        command: cn / (1.0 + cd),
    })
}

fn check_one(
    nominal: &Scenario,
    base: &Trajectory,
    alpha: f64,
    tolerance: f64,
) -> AlphaCheck {
    let scaled = match scale_scenario(nominal, alpha) {
        Ok(s) => s,
        Err(e) => {
            return AlphaCheck { alpha, deviations: None, error: Some(e.to_string()), pass: false }
        }
    };
    match integrate(&scaled) {
        Ok(traj) => match compare_trajectories(base, &traj, alpha) {
            Ok(dev) => {
                let pass = dev.max() <= tolerance;
                AlphaCheck { alpha, deviations: Some(dev), error: None, pass }
            }
            Err(e) => {
                AlphaCheck { alpha, deviations: None, error: Some(e.to_string()), pass: false }
            }
        },
        Err(e) => AlphaCheck { alpha, deviations: None, error: Some(e.to_string()), pass: false },
    }
}

/// Integrates the nominal scenario once and each scaled variant once,
/// sequentially; see [`run_scalability_check_with_workers`] for the
/// fan-out version.
pub fn run_scalability_check(
    nominal: &Scenario,
    alphas: &[f64],
    tolerance: f64,
) -> Result<ScalabilityReport, ScaleError> {
    run_scalability_check_with_workers(nominal, alphas, tolerance, 1)
}

/// Scalability check with the per-alpha runs fanned out over `workers`
/// threads. Results are reassembled in input order, so the report does not
/// depend on scheduling.
pub fn run_scalability_check_with_workers(
    nominal: &Scenario,
    alphas: &[f64],
    tolerance: f64,
    workers: usize,
) -> Result<ScalabilityReport, ScaleError> {
    if alphas.is_empty() {
        return Err(ScaleError::EmptyAlphas);
    }
    for &alpha in alphas {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(ScaleError::AlphaZero);
        }
        if matches!(nominal.law, AdaptiveLaw::EMod { .. }) && alpha < 0.0 {
            return Err(ScaleError::EModNegativeAlpha);
        }
    }
    let base = integrate(nominal)?;
    let workers = workers.max(1).min(alphas.len());
    let mut checks: Vec<Option<AlphaCheck>> = vec![None; alphas.len()];
    if workers == 1 {
        for (i, &alpha) in alphas.iter().enumerate() {
            checks[i] = Some(check_one(nominal, &base, alpha, tolerance));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut checks);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= alphas.len() {
                        break;
                    }
                    let result = check_one(nominal, &base, alphas[i], tolerance);
                    slots.lock().expect("worker poisoned the result lock")[i] = Some(result);
                });
            }
        });
    }
    let checks: Vec<AlphaCheck> =
        checks.into_iter().map(|c| c.expect("every alpha produced a check")).collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(ScalabilityReport { tolerance, checks, pass })
}
