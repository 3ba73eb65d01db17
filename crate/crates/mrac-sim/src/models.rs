//! Plant, uncertainty, and reference-model definitions plus the regressor,
//! nominal-gain, and ideal-weight algebra that ties them together.
//!
//! Dimension conventions used throughout the crate:
//! `n` = plant state dimension, `m` = control input dimension,
//! `l` = command dimension. The regressor is `omega = [x; c; kappa]`
//! of length `n + l + 1`.

use std::fmt;

use crate::matrix::{self, rank, solve_least_squares, Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Matrix(MatrixError),
    DimMismatch(String),
    /// The plant/reference pair does not satisfy `A - B K_x = A_r`,
    /// `B K_c = B_r` to tolerance; carries the offending residual.
    MatchingConditionViolated {
        which: &'static str,
        residual: f64,
    },
    SingularLambda,
    CommandOutOfRange {
        t: f64,
        duration: f64,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Matrix(e) => write!(f, "{e}"),
            ModelError::DimMismatch(what) => write!(f, "dim-mismatch: {what}"),
            ModelError::MatchingConditionViolated { which, residual } => write!(
                f,
                "matching-condition-violated: {which} residual {residual:.3e}"
            ),
            ModelError::SingularLambda => write!(f, "lambda is singular"),
            ModelError::CommandOutOfRange { t, duration } => {
                write!(f, "command evaluated at t={t} outside [0, {duration}]")
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl From<MatrixError> for ModelError {
    fn from(e: MatrixError) -> Self {
        ModelError::Matrix(e)
    }
}

/// The simulated ("truth side") plant: known `A`, `B` and the control
/// effectiveness `Lambda` that the controller does not get to see.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: Matrix,
    pub b: Matrix,
    pub lambda: Matrix,
}

impl PlantModel {
    pub fn new(a: Matrix, b: Matrix, lambda: Matrix) -> Result<Self, ModelError> {
        if !a.is_square() {
            return Err(ModelError::DimMismatch(format!(
                "plant.a must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(ModelError::DimMismatch(format!(
                "plant.b has {} rows, expected {}",
                b.rows(),
                a.rows()
            )));
        }
        if !lambda.is_square() || lambda.rows() != b.cols() {
            return Err(ModelError::DimMismatch(format!(
                "plant.lambda must be {}x{}, got {}x{}",
                b.cols(),
                b.cols(),
                lambda.rows(),
                lambda.cols()
            )));
        }
        Ok(Self { a, b, lambda })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// True iff `lambda` is diagonal with strictly positive diagonal.
    pub fn lambda_is_diagonal_positive(&self) -> bool {
        let m = self.lambda.rows();
        for i in 0..m {
            for j in 0..m {
                let v = self.lambda.at(i, j);
                if i == j {
                    if v <= 0.0 {
                        return false;
                    }
                } else if v != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Rank test on the controllability matrix `[B, AB, ..., A^{n-1}B]`.
    pub fn is_controllable(&self) -> bool {
        let n = self.n();
        let m = self.m();
        let mut blocks: Vec<Matrix> = Vec::with_capacity(n);
        blocks.push(self.b.clone());
        for k in 1..n {
            let next = self.a.matmul(&blocks[k - 1]).expect("dims checked");
            blocks.push(next);
        }
        let mut ctrb = Matrix::zeros(n, n * m);
        for (k, blk) in blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..m {
                    ctrb.set(i, k * m + j, blk.at(i, j));
                }
            }
        }
        rank(&ctrb, 1e-10) == n
    }
}

/// The unknown-truth parameterization of the matched uncertainty:
/// `Delta(omega) = Lambda * [W_xᵀ W_cᵀ w_kappa] * omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    /// `n x m` uncertainty in the system matrix.
    pub w_x: Matrix,
    /// `l x m` uncertainty in the command input matrix.
    pub w_c: Matrix,
    /// Length-`m` constant disturbance weight.
    pub w_kappa: Vec<f64>,
}

impl UncertaintyModel {
    pub fn check_dims(&self, n: usize, m: usize, l: usize) -> Result<(), ModelError> {
        if self.w_x.rows() != n || self.w_x.cols() != m {
            return Err(ModelError::DimMismatch(format!(
                "w_x must be {n}x{m}, got {}x{}",
                self.w_x.rows(),
                self.w_x.cols()
            )));
        }
        if self.w_c.rows() != l || self.w_c.cols() != m {
            return Err(ModelError::DimMismatch(format!(
                "w_c must be {l}x{m}, got {}x{}",
                self.w_c.rows(),
                self.w_c.cols()
            )));
        }
        if self.w_kappa.len() != m {
            return Err(ModelError::DimMismatch(format!(
                "w_kappa must have length {m}, got {}",
                self.w_kappa.len()
            )));
        }
        Ok(())
    }
}

/// Reference dynamics `x_r' = A_r x_r + B_r c`, optionally augmented with
/// tracking-error feedback `+ L e` (closed-loop reference model).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub a_r: Matrix,
    pub b_r: Matrix,
    /// Error-feedback gain `L`; present only for the closed-loop
    /// reference-model architecture.
    pub l_feedback: Option<Matrix>,
    pub x_r0: Vec<f64>,
}

impl ReferenceModel {
    pub fn l(&self) -> usize {
        self.b_r.cols()
    }
}

/// Nominal controller gains satisfying the matching conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalGains {
    /// `m x n` feedback gain.
    pub k_x: Matrix,
    /// `m x l` feedforward gain.
    pub k_c: Matrix,
}

/// Matching-condition residual tolerance, relative with a +1 floor.
pub const MATCHING_TOL: f64 = 1e-9;

/// Solves `B K_x = A - A_r` and `B K_c = B_r` in the least-squares sense
/// and rejects the pair if either residual exceeds [`MATCHING_TOL`].
pub fn synthesize_nominal_gains(
    plant: &PlantModel,
    reference: &ReferenceModel,
) -> Result<NominalGains, ModelError> {
    let target_x = plant.a.sub(&reference.a_r)?;
    let k_x = solve_least_squares(&plant.b, &target_x)?;
    let k_c = solve_least_squares(&plant.b, &reference.b_r)?;
    let gains = NominalGains { k_x, k_c };
    check_matching_conditions(plant, reference, &gains)?;
    Ok(gains)
}

/// Verifies `‖(A - B K_x) - A_r‖_F` and `‖B K_c - B_r‖_F` against the
/// matching tolerance, for either synthesized or user-supplied gains.
pub fn check_matching_conditions(
    plant: &PlantModel,
    reference: &ReferenceModel,
    gains: &NominalGains,
) -> Result<(), ModelError> {
    let ax = plant.a.sub(&plant.b.matmul(&gains.k_x)?)?;
    let res_x = ax.sub(&reference.a_r)?.frobenius_norm();
    let tol_x = MATCHING_TOL * (1.0 + reference.a_r.frobenius_norm());
    if res_x > tol_x {
        return Err(ModelError::MatchingConditionViolated { which: "A - B K_x = A_r", residual: res_x });
    }
    let res_c = plant.b.matmul(&gains.k_c)?.sub(&reference.b_r)?.frobenius_norm();
    let tol_c = MATCHING_TOL * (1.0 + reference.b_r.frobenius_norm());
    if res_c > tol_c {
        return Err(ModelError::MatchingConditionViolated { which: "B K_c = B_r", residual: res_c });
    }
    Ok(())
}

/// The regressor `omega = [x; c; kappa]`, in that exact order.
pub fn build_regressor(x: &[f64], c: &[f64], kappa: f64) -> Vec<f64> {
    let mut omega = Vec::with_capacity(x.len() + c.len() + 1);
    omega.extend_from_slice(x);
    omega.extend_from_slice(c);
    omega.push(kappa);
    omega
}

/// The aggregate ideal weight matrix `W` (rows: n state rows, l command
/// rows, one bias row; columns m) together with `Lambda* = I - Lambda^{-1}`.
///
/// `W` is the parameter the adaptive law implicitly estimates; it absorbs
/// the nominal gains' interaction with the unknown control effectiveness.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealWeights {
    pub w: Matrix,
    pub lambda_star: Matrix,
}

pub fn compute_ideal_weights(
    plant: &PlantModel,
    uncertainty: &UncertaintyModel,
    gains: &NominalGains,
) -> Result<IdealWeights, ModelError> {
    let m = plant.m();
    let n = plant.n();
    let l = uncertainty.w_c.rows();
    let lambda_inv =
        matrix::invert(&plant.lambda).map_err(|_| ModelError::SingularLambda)?;
    let lambda_star = Matrix::identity(m).sub(&lambda_inv)?;
    // rows 0..n:   W_x - (Lambda* K_x)ᵀ
    // rows n..n+l: W_c + (Lambda* K_c)ᵀ
    // row  n+l:    w_kappaᵀ
    let top = uncertainty.w_x.sub(&lambda_star.matmul(&gains.k_x)?.transpose())?;
    let mid = uncertainty.w_c.add(&lambda_star.matmul(&gains.k_c)?.transpose())?;
    let mut w = Matrix::zeros(n + l + 1, m);
    for i in 0..n {
        for j in 0..m {
            w.set(i, j, top.at(i, j));
        }
    }
    for i in 0..l {
        for j in 0..m {
            w.set(n + i, j, mid.at(i, j));
        }
    }
    for j in 0..m {
        w.set(n + l, j, uncertainty.w_kappa[j]);
    }
    Ok(IdealWeights { w, lambda_star })
}

/// The matched uncertainty `Delta = Lambda [W_xᵀ W_cᵀ w_kappa] omega`;
/// note that `Lambda` multiplies the whole product.
pub fn uncertainty_delta(
    uncertainty: &UncertaintyModel,
    plant: &PlantModel,
    omega: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let n = uncertainty.w_x.rows();
    let l = uncertainty.w_c.rows();
    let m = plant.m();
    if omega.len() != n + l + 1 {
        return Err(ModelError::DimMismatch(format!(
            "regressor length {} does not match n+l+1 = {}",
            omega.len(),
            n + l + 1
        )));
    }
    let (x, rest) = omega.split_at(n);
    let (c, kappa) = rest.split_at(l);
    let mut inner = uncertainty.w_x.tr_mul_vec(x)?;
    let from_c = uncertainty.w_c.tr_mul_vec(c)?;
    for i in 0..m {
        inner[i] += from_c[i] + uncertainty.w_kappa[i] * kappa[0];
    }
    Ok(plant.lambda.mul_vec(&inner)?)
}

// ---------------------------------------------------------------------------
// command profiles
// ---------------------------------------------------------------------------

/// A single additive command component.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandPrimitive {
    /// Zero before `t_on`, then `level`. Discontinuous; validation flags
    /// step profiles because the closed-loop analysis assumes a uniformly
    /// continuous command.
    Step { t_on: f64, level: Vec<f64> },
    /// Holds `from` before `t0`, interpolates linearly to `to` on
    /// `[t0, t1]`, holds `to` after `t1`.
    Ramp { t0: f64, t1: f64, from: Vec<f64>, to: Vec<f64> },
    /// `amplitude * sin(2 pi f t + phase)`, componentwise amplitude.
    Sine { amplitude: Vec<f64>, frequency_hz: f64, phase: f64 },
}

impl CommandPrimitive {
    pub fn dim(&self) -> usize {
        match self {
            CommandPrimitive::Step { level, .. } => level.len(),
            CommandPrimitive::Ramp { from, .. } => from.len(),
            CommandPrimitive::Sine { amplitude, .. } => amplitude.len(),
        }
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            CommandPrimitive::Step { t_on, level } => {
                if t >= *t_on {
                    for (o, v) in out.iter_mut().zip(level) {
                        *o += v;
                    }
                }
            }
            CommandPrimitive::Ramp { t0, t1, from, to } => {
                let s = if t <= *t0 {
                    0.0
                } else if t >= *t1 {
                    1.0
                } else {
                    (t - t0) / (t1 - t0)
                };
                for (o, (f, g)) in out.iter_mut().zip(from.iter().zip(to)) {
                    *o += f + (g - f) * s;
                }
            }
            CommandPrimitive::Sine { amplitude, frequency_hz, phase } => {
                let v = (2.0 * std::f64::consts::PI * frequency_hz * t + phase).sin();
                for (o, a) in out.iter_mut().zip(amplitude) {
                    *o += a * v;
                }
            }
        }
    }
}

/// Sum of primitives times a global `scale` factor. The scale is how the
/// scalability harness applies `c = alpha * c0` without re-deriving the
/// primitive parameters, keeping the scaled command an exact float
/// multiple of the nominal one.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandProfile {
    pub primitives: Vec<CommandPrimitive>,
    pub dim: usize,
    pub duration: f64,
    pub scale: f64,
}

impl CommandProfile {
    pub fn new(primitives: Vec<CommandPrimitive>, dim: usize, duration: f64) -> Self {
        Self { primitives, dim, duration, scale: 1.0 }
    }

    pub fn has_step(&self) -> bool {
        self.primitives.iter().any(|p| matches!(p, CommandPrimitive::Step { .. }))
    }
}

/// Evaluates the command at `t in [0, duration]`. A hair of slack is
/// allowed at the endpoints because integrator stage times are computed
/// as `k * dt` and may overshoot the stored duration by rounding.
pub fn evaluate_command(profile: &CommandProfile, t: f64) -> Result<Vec<f64>, ModelError> {
    let eps = 1e-9 * (1.0 + profile.duration);
    if t < -eps || t > profile.duration + eps {
        return Err(ModelError::CommandOutOfRange { t, duration: profile.duration });
    }
    let mut out = vec![0.0; profile.dim];
    for p in &profile.primitives {
        p.eval_into(t, &mut out);
    }
    for o in out.iter_mut() {
        *o *= profile.scale;
    }
    Ok(out)
}
