//! Closed-loop assembly and fixed-step RK4 integration.
//!
//! The plant is always advanced through its primal form
//! `x' = A x + B Lambda u + B Delta(omega)` — never through the
//! equivalent error-system form — so the algebraic equivalence of the two
//! stays a testable property of the simulator instead of an assumption
//! baked into it.

use std::fmt;

use crate::laws::{adaptive_input, weight_derivative, AdaptiveState, LawError};
use crate::matrix::{
    lu_solve, solve_least_squares, vec_add, vec_inf_norm, vec_sub, Matrix, MatrixError,
};
use crate::models::{build_regressor, evaluate_command, uncertainty_delta, ModelError};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Matrix(MatrixError),
    Model(ModelError),
    Law(LawError),
    /// A state component left the configured divergence bound (or went
    /// non-finite); reported instead of crashing on overflow.
    Diverged { t: f64, norm: f64 },
    ShapeMismatch(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Matrix(e) => write!(f, "{e}"),
            SimError::Model(e) => write!(f, "{e}"),
            SimError::Law(e) => write!(f, "{e}"),
            SimError::Diverged { t, norm } => {
                write!(f, "diverged: state norm {norm:.3e} at t = {t:.6}")
            }
            SimError::ShapeMismatch(what) => write!(f, "state shape mismatch: {what}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<MatrixError> for SimError {
    fn from(e: MatrixError) -> Self {
        SimError::Matrix(e)
    }
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

impl From<LawError> for SimError {
    fn from(e: LawError) -> Self {
        SimError::Law(e)
    }
}

/// Which closed-loop structure wraps the adaptive law.
#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    /// Plain reference model `x_r' = A_r x_r + B_r c`.
    PlainReference,
    /// Reference model augmented with `+ L e`; `L` lives on the scenario's
    /// [`crate::models::ReferenceModel`].
    ClosedLoopReference,
    /// Command-governor augmentation: total command `c = c_D + c_g`, with
    /// `c_g` produced from the governor state `xi`. Requires `m == l` and
    /// invertible `K_c`.
    CommandGovernor { lambda: f64 },
}

impl Architecture {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Architecture::PlainReference => "plain",
            Architecture::ClosedLoopReference => "clrm",
            Architecture::CommandGovernor { .. } => "governor",
        }
    }
}

/// Full integration state for one step. Optional components are present
/// exactly when the architecture requires them (`xi`, `x_r_des` for the
/// governor; `w_hat_f` inside `weights` for the frequency-limited law).
/// Also serves as the derivative container for RK4.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub x: Vec<f64>,
    pub x_r: Vec<f64>,
    pub weights: AdaptiveState,
    pub xi: Option<Vec<f64>>,
    /// Desired reference state driven by the desired command only
    /// (governor architecture).
    pub x_r_des: Option<Vec<f64>>,
}

fn zip_opt_vec(
    a: &Option<Vec<f64>>,
    b: &Option<Vec<f64>>,
    f: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    what: &str,
) -> Result<Option<Vec<f64>>, SimError> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some(f(a, b))),
        (None, None) => Ok(None),
        _ => Err(SimError::ShapeMismatch(what.to_string())),
    }
}

fn zip_opt_mat(
    a: &Option<Matrix>,
    b: &Option<Matrix>,
    f: impl Fn(&Matrix, &Matrix) -> Result<Matrix, MatrixError>,
    what: &str,
) -> Result<Option<Matrix>, SimError> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some(f(a, b)?)),
        (None, None) => Ok(None),
        _ => Err(SimError::ShapeMismatch(what.to_string())),
    }
}

impl ClosedLoopState {
    /// `self + h * d`, componentwise.
    pub fn add_scaled(&self, d: &ClosedLoopState, h: f64) -> Result<ClosedLoopState, SimError> {
        let axpy = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, k)| x + h * k).collect()
        };
        Ok(ClosedLoopState {
            x: axpy(&self.x, &d.x),
            x_r: axpy(&self.x_r, &d.x_r),
            weights: AdaptiveState {
                w_hat: self.weights.w_hat.add_scaled(&d.weights.w_hat, h)?,
                w_hat_f: zip_opt_mat(
                    &self.weights.w_hat_f,
                    &d.weights.w_hat_f,
                    |a, b| a.add_scaled(b, h),
                    "w_hat_f",
                )?,
            },
            xi: zip_opt_vec(&self.xi, &d.xi, axpy, "xi")?,
            x_r_des: zip_opt_vec(&self.x_r_des, &d.x_r_des, axpy, "x_r_des")?,
        })
    }

    /// Classical RK4 combination `self + dt/6 (k1 + 2 k2 + 2 k3 + k4)`.
    fn rk4_combine(
        &self,
        k1: &ClosedLoopState,
        k2: &ClosedLoopState,
        k3: &ClosedLoopState,
        k4: &ClosedLoopState,
        dt: f64,
    ) -> Result<ClosedLoopState, SimError> {
        let h6 = dt / 6.0;
        let comb = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..y.len())
                .map(|i| {
                    let mut s = a[i] + 2.0 * b[i];
                    s += 2.0 * c[i];
                    s += d[i];
                    y[i] + h6 * s
                })
                .collect()
        };
        let comb_mat = |y: &Matrix, a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix| -> Matrix {
            let data = comb(y.data(), a.data(), b.data(), c.data(), d.data());
            Matrix::new(y.rows(), y.cols(), data).expect("shape preserved")
        };
        let opt_vec = |y: &Option<Vec<f64>>,
                       a: &Option<Vec<f64>>,
                       b: &Option<Vec<f64>>,
                       c: &Option<Vec<f64>>,
                       d: &Option<Vec<f64>>|
         -> Result<Option<Vec<f64>>, SimError> {
            match (y, a, b, c, d) {
                (Some(y), Some(a), Some(b), Some(c), Some(d)) => Ok(Some(comb(y, a, b, c, d))),
                (None, None, None, None, None) => Ok(None),
                _ => Err(SimError::ShapeMismatch("optional state component".into())),
            }
        };
        Ok(ClosedLoopState {
            x: comb(&self.x, &k1.x, &k2.x, &k3.x, &k4.x),
            x_r: comb(&self.x_r, &k1.x_r, &k2.x_r, &k3.x_r, &k4.x_r),
            weights: AdaptiveState {
                w_hat: comb_mat(
                    &self.weights.w_hat,
                    &k1.weights.w_hat,
                    &k2.weights.w_hat,
                    &k3.weights.w_hat,
                    &k4.weights.w_hat,
                ),
                w_hat_f: match (
                    &self.weights.w_hat_f,
                    &k1.weights.w_hat_f,
                    &k2.weights.w_hat_f,
                    &k3.weights.w_hat_f,
                    &k4.weights.w_hat_f,
                ) {
                    (Some(y), Some(a), Some(b), Some(c), Some(d)) => {
                        Some(comb_mat(y, a, b, c, d))
                    }
                    (None, None, None, None, None) => None,
                    _ => return Err(SimError::ShapeMismatch("w_hat_f".into())),
                },
            },
            xi: opt_vec(&self.xi, &k1.xi, &k2.xi, &k3.xi, &k4.xi)?,
            x_r_des: opt_vec(&self.x_r_des, &k1.x_r_des, &k2.x_r_des, &k3.x_r_des, &k4.x_r_des)?,
        })
    }

    /// Max-abs over every component; +inf when anything is non-finite.
    pub fn inf_norm(&self) -> f64 {
        let mut m = vec_inf_norm(&self.x).max(vec_inf_norm(&self.x_r));
        m = m.max(vec_inf_norm(self.weights.w_hat.data()));
        if let Some(wf) = &self.weights.w_hat_f {
            m = m.max(vec_inf_norm(wf.data()));
        }
        if let Some(xi) = &self.xi {
            m = m.max(vec_inf_norm(xi));
        }
        if let Some(xd) = &self.x_r_des {
            m = m.max(vec_inf_norm(xd));
        }
        m
    }
}

/// Per-step signals recorded alongside the state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSignals {
    pub e: Vec<f64>,
    pub u: Vec<f64>,
    pub u_ad: Vec<f64>,
    pub c_total: Vec<f64>,
}

/// Time-stamped record of a closed-loop run on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<ClosedLoopState>,
    pub u: Vec<Vec<f64>>,
    pub u_ad: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub c_total: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Desired reference state at step `k` (governor runs only).
    pub fn x_r_desired(&self, k: usize) -> Option<&[f64]> {
        self.states[k].x_r_des.as_deref()
    }

    pub fn sup_e_inf(&self) -> f64 {
        self.e.iter().map(|v| vec_inf_norm(v)).fold(0.0, f64::max)
    }

    pub fn sup_u_ad_inf(&self) -> f64 {
        self.u_ad.iter().map(|v| vec_inf_norm(v)).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// command governor pieces
// ---------------------------------------------------------------------------

/// Orthogonal projection onto the column space of `B`:
/// `G = B (BᵀB)⁻¹ Bᵀ`.
pub fn governor_projection(b: &Matrix) -> Result<Matrix, MatrixError> {
    let pinv = solve_least_squares(b, &Matrix::identity(b.rows()))?;
    b.matmul(&pinv)
}

/// Governor state derivative `xi' = -lambda xi + lambda e`.
pub fn governor_derivative(xi: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    xi.iter().zip(e).map(|(z, ev)| -lambda * z + lambda * ev).collect()
}

/// Governor output `g = lambda xi + (A_r - lambda I) e`.
pub fn governor_output(xi: &[f64], e: &[f64], a_r: &Matrix, lambda: f64) -> Result<Vec<f64>, MatrixError> {
    let are = a_r.mul_vec(e)?;
    Ok((0..xi.len()).map(|i| lambda * xi[i] + are[i] - lambda * e[i]).collect())
}

/// Additional command `c_g = K_c⁻¹ (BᵀB)⁻¹ Bᵀ g`.
pub fn governor_command(g: &[f64], k_c: &Matrix, b: &Matrix) -> Result<Vec<f64>, MatrixError> {
    let pinv = solve_least_squares(b, &Matrix::identity(b.rows()))?;
    let y = pinv.mul_vec(g)?;
    let rhs = Matrix::new(y.len(), 1, y)?;
    let cg = lu_solve(k_c, &rhs).map_err(|e| match e {
        MatrixError::Singular(_) => MatrixError::Singular("kc"),
        other => other,
    })?;
    Ok(cg.data().to_vec())
}

/// Precomputed governor command gain `K_c⁻¹ (BᵀB)⁻¹ Bᵀ`, used by the
/// integrator so the two small solves do not run every derivative call.
pub fn governor_command_matrix(k_c: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    let pinv = solve_least_squares(b, &Matrix::identity(b.rows()))?;
    let kci = crate::matrix::invert(k_c).map_err(|e| match e {
        MatrixError::Singular(_) => MatrixError::Singular("kc"),
        other => other,
    })?;
    kci.matmul(&pinv)
}

// ---------------------------------------------------------------------------
// closed-loop derivative field
// ---------------------------------------------------------------------------

/// Derivative plus the recordable signals at `(state, t)`.
///
/// Evaluation order: total command, regressor, adaptive input, control
/// signal, primal plant derivative, reference derivative, weight
/// derivative, then governor extras.
pub fn evaluate_step(
    scn: &Scenario,
    state: &ClosedLoopState,
    t: f64,
) -> Result<(ClosedLoopState, StepSignals), SimError> {
    let e = vec_sub(&state.x, &state.x_r);
    let c_base = evaluate_command(&scn.command, t)?;
    let (c_total, d_xi) = match &scn.architecture {
        Architecture::CommandGovernor { lambda } => {
            let xi = state
                .xi
                .as_ref()
                .ok_or_else(|| SimError::ShapeMismatch("governor state xi missing".into()))?;
            let g = governor_output(xi, &e, &scn.reference.a_r, *lambda)?;
            let gain = scn
                .gov_command_gain
                .as_ref()
                .ok_or_else(|| SimError::ShapeMismatch("governor gain missing".into()))?;
            let c_g = gain.mul_vec(&g)?;
            (vec_add(&c_base, &c_g), Some(governor_derivative(xi, &e, *lambda)))
        }
        _ => (c_base.clone(), None),
    };

    let omega = build_regressor(&state.x, &c_total, scn.kappa);
    let u_ad = adaptive_input(&state.weights.w_hat, &omega)?;
    let kx_x = scn.gains.k_x.mul_vec(&state.x)?;
    let kc_c = scn.gains.k_c.mul_vec(&c_total)?;
    let u: Vec<f64> = (0..u_ad.len()).map(|i| -kx_x[i] + kc_c[i] - u_ad[i]).collect();

    // primal plant form
    let delta = uncertainty_delta(&scn.uncertainty, &scn.plant, &omega)?;
    let ax = scn.plant.a.mul_vec(&state.x)?;
    let b_lam_u = scn.plant.b.mul_vec(&scn.plant.lambda.mul_vec(&u)?)?;
    let b_delta = scn.plant.b.mul_vec(&delta)?;
    let d_x: Vec<f64> = (0..ax.len()).map(|i| ax[i] + b_lam_u[i] + b_delta[i]).collect();

    // reference model (total command feeds the reference in every
    // architecture; the governor's desired reference runs separately)
    let ar_xr = scn.reference.a_r.mul_vec(&state.x_r)?;
    let br_c = scn.reference.b_r.mul_vec(&c_total)?;
    let mut d_xr: Vec<f64> = (0..ar_xr.len()).map(|i| ar_xr[i] + br_c[i]).collect();
    if matches!(scn.architecture, Architecture::ClosedLoopReference) {
        let l = scn
            .reference
            .l_feedback
            .as_ref()
            .ok_or_else(|| SimError::ShapeMismatch("clrm requires l_feedback".into()))?;
        let le = l.mul_vec(&e)?;
        for i in 0..d_xr.len() {
            d_xr[i] += le[i];
        }
    }

    let d_weights =
        weight_derivative(&scn.law, &state.weights, &omega, &e, &scn.p, &scn.plant.b)?;

    let d_xrd = match (&scn.architecture, &state.x_r_des) {
        (Architecture::CommandGovernor { .. }, Some(xrd)) => {
            let ar_xrd = scn.reference.a_r.mul_vec(xrd)?;
            let br_cd = scn.reference.b_r.mul_vec(&c_base)?;
            Some((0..ar_xrd.len()).map(|i| ar_xrd[i] + br_cd[i]).collect())
        }
        (Architecture::CommandGovernor { .. }, None) => {
            return Err(SimError::ShapeMismatch("governor state x_r_des missing".into()))
        }
        _ => None,
    };

    Ok((
        ClosedLoopState { x: d_x, x_r: d_xr, weights: d_weights, xi: d_xi, x_r_des: d_xrd },
        StepSignals { e, u, u_ad, c_total },
    ))
}

/// The closed-loop derivative field alone.
pub fn closed_loop_derivative(
    scn: &Scenario,
    state: &ClosedLoopState,
    t: f64,
) -> Result<ClosedLoopState, SimError> {
    evaluate_step(scn, state, t).map(|(d, _)| d)
}

/// Initial integration state for a validated scenario.
pub fn initial_state(scn: &Scenario) -> ClosedLoopState {
    let is_governor = matches!(scn.architecture, Architecture::CommandGovernor { .. });
    let n = scn.plant.n();
    ClosedLoopState {
        x: scn.initial.x0.clone(),
        x_r: scn.reference.x_r0.clone(),
        weights: AdaptiveState {
            w_hat: scn.initial.w_hat0.clone(),
            w_hat_f: if scn.law.uses_filter() {
                Some(
                    scn.initial
                        .w_hat_f0
                        .clone()
                        .unwrap_or_else(|| scn.initial.w_hat0.clone()),
                )
            } else {
                None
            },
        },
        xi: if is_governor { Some(vec![0.0; n]) } else { None },
        x_r_des: if is_governor { Some(scn.reference.x_r0.clone()) } else { None },
    }
}

/// Classical fixed-step RK4 over `[0, duration]`, recording every step.
/// Deterministic bit-for-bit for identical scenarios. Fails with
/// [`SimError::Diverged`] when the state leaves the divergence bound.
pub fn integrate(scn: &Scenario) -> Result<Trajectory, SimError> {
    let dt = scn.sim.dt;
    let steps = (scn.sim.duration / dt).round() as usize;
    let mut state = initial_state(scn);
    let cap = steps + 1;
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(cap),
        states: Vec::with_capacity(cap),
        u: Vec::with_capacity(cap),
        u_ad: Vec::with_capacity(cap),
        e: Vec::with_capacity(cap),
        c_total: Vec::with_capacity(cap),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let (k1, signals) = evaluate_step(scn, &state, t)?;
        traj.times.push(t);
        traj.states.push(state.clone());
        traj.u.push(signals.u);
        traj.u_ad.push(signals.u_ad);
        traj.e.push(signals.e);
        traj.c_total.push(signals.c_total);
        if k == steps {
            break;
        }
        let half = 0.5 * dt;
        let s2 = state.add_scaled(&k1, half)?;
        let (k2, _) = evaluate_step(scn, &s2, t + half)?;
        let s3 = state.add_scaled(&k2, half)?;
        let (k3, _) = evaluate_step(scn, &s3, t + half)?;
        let t_next = (k + 1) as f64 * dt;
        let s4 = state.add_scaled(&k3, dt)?;
        let (k4, _) = evaluate_step(scn, &s4, t_next)?;
        let next = state.rk4_combine(&k1, &k2, &k3, &k4, dt)?;
        let norm = next.inf_norm();
        if !norm.is_finite() || norm > scn.sim.divergence_bound {
            return Err(SimError::Diverged { t: t_next, norm });
        }
        state = next;
    }
    Ok(traj)
}
