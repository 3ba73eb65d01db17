//! The adaptive weight-update laws as pure derivative functions.
//!
//! All four laws share the gradient term `Gamma omega eᵀ P B` and differ
//! only in the damping added to it:
//!
//! * standard MRAC:      `dW = Gamma omega eᵀ P B`
//! * sigma-modification: `dW = ... - sigma W`
//! * e-modification:     `dW = ... - sigma_e ‖e‖₂ W`
//! * frequency-limited:  `dW = ... - sigma (W - W_f)`,
//!   with the low-pass filter state `dW_f = Gamma_f (W - W_f)`.

use std::fmt;

use crate::matrix::{outer, vec_norm2, Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq)]
pub enum LawError {
    Matrix(MatrixError),
    /// Frequency-limited law evaluated without a filter state.
    MissingFilterState,
}

impl fmt::Display for LawError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawError::Matrix(e) => write!(f, "{e}"),
            LawError::MissingFilterState => {
                write!(f, "frequency-limited law requires a filtered weight state")
            }
        }
    }
}

impl std::error::Error for LawError {}

impl From<MatrixError> for LawError {
    fn from(e: MatrixError) -> Self {
        LawError::Matrix(e)
    }
}

/// Law selection with its gains. `gamma` is the SPD learning rate; scalar
/// gains in scenario files are expanded to `gamma * I` before this type is
/// constructed.
#[derive(Debug, Clone, PartialEq)]
pub enum AdaptiveLaw {
    StandardMrac { gamma: Matrix },
    SigmaMod { gamma: Matrix, sigma: f64 },
    EMod { gamma: Matrix, sigma_e: f64 },
    FreqLimited { gamma: Matrix, sigma: f64, gamma_f: Matrix, gamma_f_max: f64 },
}

impl AdaptiveLaw {
    pub fn gamma(&self) -> &Matrix {
        match self {
            AdaptiveLaw::StandardMrac { gamma }
            | AdaptiveLaw::SigmaMod { gamma, .. }
            | AdaptiveLaw::EMod { gamma, .. }
            | AdaptiveLaw::FreqLimited { gamma, .. } => gamma,
        }
    }

    /// Whether the law carries the low-pass filtered weight state.
    pub fn uses_filter(&self) -> bool {
        matches!(self, AdaptiveLaw::FreqLimited { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AdaptiveLaw::StandardMrac { .. } => "standard",
            AdaptiveLaw::SigmaMod { .. } => "sigma-mod",
            AdaptiveLaw::EMod { .. } => "e-mod",
            AdaptiveLaw::FreqLimited { .. } => "freq-limited",
        }
    }
}

/// Adaptive weight estimate, plus the filtered copy for the
/// frequency-limited law. Also doubles as the derivative container.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub w_hat: Matrix,
    pub w_hat_f: Option<Matrix>,
}

/// The adaptive control input `u_ad = W_hatᵀ omega`.
pub fn adaptive_input(w_hat: &Matrix, omega: &[f64]) -> Result<Vec<f64>, LawError> {
    Ok(w_hat.tr_mul_vec(omega)?)
}

/// Law-specific weight derivative. `p` must be the Lyapunov solution for
/// the scenario's reference matrix and design matrix `q`.
pub fn weight_derivative(
    law: &AdaptiveLaw,
    state: &AdaptiveState,
    omega: &[f64],
    e: &[f64],
    p: &Matrix,
    b: &Matrix,
) -> Result<AdaptiveState, LawError> {
    // gradient term: (Gamma omega) (eᵀ P B); P is symmetric so eᵀP = (P e)ᵀ
    let pe = p.mul_vec(e)?;
    let epb = b.tr_mul_vec(&pe)?;
    let gw = law.gamma().mul_vec(omega)?;
    let base = outer(&gw, &epb);
    match law {
        AdaptiveLaw::StandardMrac { .. } => {
            Ok(AdaptiveState { w_hat: base, w_hat_f: None })
        }
        AdaptiveLaw::SigmaMod { sigma, .. } => {
            let d = base.add_scaled(&state.w_hat, -sigma)?;
            Ok(AdaptiveState { w_hat: d, w_hat_f: None })
        }
        AdaptiveLaw::EMod { sigma_e, .. } => {
            let coeff = sigma_e * vec_norm2(e);
            let d = base.add_scaled(&state.w_hat, -coeff)?;
            Ok(AdaptiveState { w_hat: d, w_hat_f: None })
        }
        AdaptiveLaw::FreqLimited { sigma, gamma_f, .. } => {
            let w_f = state.w_hat_f.as_ref().ok_or(LawError::MissingFilterState)?;
            let diff = state.w_hat.sub(w_f)?;
            let d_w = base.add_scaled(&diff, -sigma)?;
            let d_wf = gamma_f.matmul(&diff)?;
            Ok(AdaptiveState { w_hat: d_w, w_hat_f: Some(d_wf) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::vec_scale;
    use crate::testutil::{random_matrix, random_spd, random_vec, SplitMix64};

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a}");
    }

    #[test]
    fn adaptive_input_examples() {
        let zero = Matrix::zeros(3, 1);
        assert_eq!(adaptive_input(&zero, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0]);
        let w = Matrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(adaptive_input(&w, &[3.0, 4.0]).unwrap(), vec![11.0]);
    }

    #[test]
    fn adaptive_input_matches_loop_nest() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let (k, m) = (5, 3);
            let w = random_matrix(&mut rng, k, m, -2.0, 2.0);
            let omega = random_vec(&mut rng, k, -2.0, 2.0);
            let got = adaptive_input(&w, &omega).unwrap();
            for j in 0..m {
                let mut v = 0.0;
                for i in 0..k {
                    v += w.at(i, j) * omega[i];
                }
                assert!((got[j] - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_error_equilibria() {
        let e = vec![0.0, 0.0];
        let p = Matrix::identity(2);
        let b = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let omega = vec![1.0, 2.0, 3.0];
        let zero_state = AdaptiveState { w_hat: Matrix::zeros(3, 1), w_hat_f: None };

        let law = AdaptiveLaw::StandardMrac { gamma: Matrix::identity(3) };
        let d = weight_derivative(&law, &zero_state, &omega, &e, &p, &b).unwrap();
        assert!(d.w_hat.max_abs() <= 1e-15);

        let law = AdaptiveLaw::SigmaMod { gamma: Matrix::identity(3), sigma: 0.5 };
        let d = weight_derivative(&law, &zero_state, &omega, &e, &p, &b).unwrap();
        assert!(d.w_hat.max_abs() <= 1e-15);

        let both_zero = AdaptiveState {
            w_hat: Matrix::zeros(3, 1),
            w_hat_f: Some(Matrix::zeros(3, 1)),
        };
        let law = AdaptiveLaw::FreqLimited {
            gamma: Matrix::identity(3),
            sigma: 1.0,
            gamma_f: Matrix::identity(3),
            gamma_f_max: 1.0,
        };
        let d = weight_derivative(&law, &both_zero, &omega, &e, &p, &b).unwrap();
        assert!(d.w_hat.max_abs() <= 1e-15);
        assert!(d.w_hat_f.unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn standard_scalar_case() {
        // Gamma=1, omega=2, e=3, P=1, B=1 -> dW = 6
        let law = AdaptiveLaw::StandardMrac { gamma: Matrix::identity(1) };
        let state = AdaptiveState { w_hat: Matrix::zeros(1, 1), w_hat_f: None };
        let d = weight_derivative(
            &law,
            &state,
            &[2.0],
            &[3.0],
            &Matrix::identity(1),
            &Matrix::identity(1),
        )
        .unwrap();
        approx(d.w_hat.at(0, 0), 6.0, 1e-14);
    }

    #[test]
    fn sigma_pure_decay() {
        let law = AdaptiveLaw::SigmaMod { gamma: Matrix::identity(1), sigma: 0.5 };
        let state = AdaptiveState {
            w_hat: Matrix::new(1, 1, vec![4.0]).unwrap(),
            w_hat_f: None,
        };
        let d = weight_derivative(
            &law,
            &state,
            &[1.0],
            &[0.0],
            &Matrix::identity(1),
            &Matrix::identity(1),
        )
        .unwrap();
        approx(d.w_hat.at(0, 0), -2.0, 1e-14);
    }

    #[test]
    fn freq_limited_filter_relaxation() {
        let law = AdaptiveLaw::FreqLimited {
            gamma: Matrix::identity(1),
            sigma: 1.0,
            gamma_f: Matrix::identity(1),
            gamma_f_max: 1.0,
        };
        let state = AdaptiveState {
            w_hat: Matrix::new(1, 1, vec![2.0]).unwrap(),
            w_hat_f: Some(Matrix::zeros(1, 1)),
        };
        let d = weight_derivative(
            &law,
            &state,
            &[1.0],
            &[0.0],
            &Matrix::identity(1),
            &Matrix::identity(1),
        )
        .unwrap();
        approx(d.w_hat.at(0, 0), -2.0, 1e-14);
        approx(d.w_hat_f.unwrap().at(0, 0), 2.0, 1e-14);
    }

    #[test]
    fn freq_limited_requires_filter_state() {
        let law = AdaptiveLaw::FreqLimited {
            gamma: Matrix::identity(1),
            sigma: 1.0,
            gamma_f: Matrix::identity(1),
            gamma_f_max: 1.0,
        };
        let state = AdaptiveState { w_hat: Matrix::zeros(1, 1), w_hat_f: None };
        assert_eq!(
            weight_derivative(&law, &state, &[1.0], &[0.0], &Matrix::identity(1), &Matrix::identity(1)),
            Err(LawError::MissingFilterState)
        );
    }

    /// Evaluating any law with `(Gamma0 / alpha^2, alpha omega, alpha e)`
    /// must reproduce the nominal evaluation with `(Gamma0, omega, e)`;
    /// for e-mod this needs `sigma_e = sigma0 / alpha` and `alpha > 0`.
    #[test]
    fn derivative_scaling_invariance() {
        let mut rng = SplitMix64::new(23);
        let alphas = [0.5, 2.0, 5.0, -2.0, 0.3, 10.0];
        for trial in 0..40 {
            let (n, l, m) = (3, 2, 2);
            let k = n + l + 1;
            let gamma0 = random_spd(&mut rng, k);
            let p = random_spd(&mut rng, n);
            let b = random_matrix(&mut rng, n, m, -1.0, 1.0);
            let omega = random_vec(&mut rng, k, -2.0, 2.0);
            let e = random_vec(&mut rng, n, -2.0, 2.0);
            let w_hat = random_matrix(&mut rng, k, m, -2.0, 2.0);
            let w_hat_f = random_matrix(&mut rng, k, m, -2.0, 2.0);
            let sigma0 = rng.range(0.1, 2.0);
            let gamma_f = random_spd(&mut rng, k);

            for &alpha in &alphas {
                let scaled_omega = vec_scale(&omega, alpha);
                let scaled_e = vec_scale(&e, alpha);
                let gamma_scaled = gamma0.div_scalar(alpha * alpha);

                let mut cases: Vec<(AdaptiveLaw, AdaptiveLaw)> = vec![
                    (
                        AdaptiveLaw::StandardMrac { gamma: gamma0.clone() },
                        AdaptiveLaw::StandardMrac { gamma: gamma_scaled.clone() },
                    ),
                    (
                        AdaptiveLaw::SigmaMod { gamma: gamma0.clone(), sigma: sigma0 },
                        AdaptiveLaw::SigmaMod { gamma: gamma_scaled.clone(), sigma: sigma0 },
                    ),
                    (
                        AdaptiveLaw::FreqLimited {
                            gamma: gamma0.clone(),
                            sigma: sigma0,
                            gamma_f: gamma_f.clone(),
                            gamma_f_max: 100.0,
                        },
                        AdaptiveLaw::FreqLimited {
                            gamma: gamma_scaled.clone(),
                            sigma: sigma0,
                            gamma_f: gamma_f.clone(),
                            gamma_f_max: 100.0,
                        },
                    ),
                ];
                if alpha > 0.0 {
                    cases.push((
                        AdaptiveLaw::EMod { gamma: gamma0.clone(), sigma_e: sigma0 },
                        AdaptiveLaw::EMod { gamma: gamma_scaled.clone(), sigma_e: sigma0 / alpha },
                    ));
                }
                for (nominal_law, scaled_law) in cases {
                    let state = AdaptiveState {
                        w_hat: w_hat.clone(),
                        w_hat_f: if nominal_law.uses_filter() {
                            Some(w_hat_f.clone())
                        } else {
                            None
                        },
                    };
                    let nominal =
                        weight_derivative(&nominal_law, &state, &omega, &e, &p, &b).unwrap();
                    let scaled =
                        weight_derivative(&scaled_law, &state, &scaled_omega, &scaled_e, &p, &b)
                            .unwrap();
                    let scale = nominal.w_hat.max_abs().max(1.0);
                    let diff = nominal.w_hat.sub(&scaled.w_hat).unwrap().max_abs();
                    assert!(
                        diff <= 1e-12 * scale,
                        "law {} alpha {alpha} trial {trial}: diff {diff:.3e}",
                        nominal_law.kind_name()
                    );
                    if let (Some(nf), Some(sf)) = (&nominal.w_hat_f, &scaled.w_hat_f) {
                        let fdiff = nf.sub(sf).unwrap().max_abs();
                        assert!(fdiff <= 1e-12 * nf.max_abs().max(1.0));
                    }
                }
            }
        }
    }

    /// e-modification with negative alpha flips the damping sign, so the
    /// substitution must NOT be invariant there.
    #[test]
    fn emod_breaks_for_negative_alpha() {
        let gamma0 = Matrix::identity(3);
        let alpha = -2.0;
        let nominal_law = AdaptiveLaw::EMod { gamma: gamma0.clone(), sigma_e: 1.0 };
        let scaled_law = AdaptiveLaw::EMod {
            gamma: gamma0.div_scalar(alpha * alpha),
            sigma_e: 1.0 / alpha,
        };
        let state = AdaptiveState {
            w_hat: Matrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap(),
            w_hat_f: None,
        };
        let omega = vec![1.0, 0.5, 0.2];
        let e = vec![1.0];
        let p = Matrix::identity(1);
        let b = Matrix::identity(1);
        let nominal = weight_derivative(&nominal_law, &state, &omega, &e, &p, &b).unwrap();
        let scaled = weight_derivative(
            &scaled_law,
            &state,
            &vec_scale(&omega, alpha),
            &vec_scale(&e, alpha),
            &p,
            &b,
        )
        .unwrap();
        let diff = nominal.w_hat.sub(&scaled.w_hat).unwrap().max_abs();
        assert!(diff > 1.0, "expected a visible sign flip, diff {diff}");
    }
}
