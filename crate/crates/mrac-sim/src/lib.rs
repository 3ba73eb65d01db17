//! Closed-loop simulation of model reference adaptive control (MRAC)
//! architectures, plus a harness that machine-checks how responses scale
//! when the command profile is scaled by `alpha` and the learning rate by
//! `1/alpha^2`.
//!
//! The crate covers six architectures: standard MRAC, sigma-modification,
//! e-modification, frequency-limited adaptation, closed-loop reference
//! models, and command-governor augmentation. Scenarios are described in a
//! TOML file (see [`scenario`]), integrated with fixed-step RK4
//! ([`sim::integrate`]), and compared against their scaled counterparts
//! ([`scaling::run_scalability_check`]).
//!
//! ```
//! use mrac_sim::{integrate, run_scalability_check, Scenario};
//!
//! let scenario = Scenario::from_toml_str(r#"
//!     [plant]
//!     a = [[0.0, 1.0], [-1.0, -0.5]]
//!     b = [[0.0], [1.0]]
//!     lambda = [[0.7]]
//!
//!     [uncertainty]
//!     w_x = [[0.6], [-0.4]]
//!     w_c = [[0.3]]
//!     w_kappa = [0.25]
//!
//!     [reference]
//!     a_r = [[0.0, 1.0], [-4.0, -2.8]]
//!     b_r = [[0.0], [4.0]]
//!     x_r0 = [0.0, 0.0]
//!
//!     [law]
//!     kind = "standard"
//!     gamma = 10.0
//!
//!     [architecture]
//!     kind = "plain"
//!
//!     [[command]]
//!     type = "sine"
//!     amplitude = [1.0]
//!     frequency_hz = 0.25
//!
//!     [sim]
//!     dt = 0.001
//!     duration = 0.5
//!
//!     [initial]
//!     x0 = [0.5, 0.0]
//! "#)?;
//!
//! let trajectory = integrate(&scenario)?;
//! assert_eq!(trajectory.len(), scenario.steps() + 1);
//!
//! // command scaled by 2, learning rate by 1/4: the response doubles
//! // exactly and the adaptive weights do not move
//! let report = run_scalability_check(&scenario, &[2.0], 1e-9)?;
//! assert!(report.pass);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod laws;
pub mod matrix;
pub mod models;
pub mod report;
pub mod scaling;
pub mod scenario;
pub mod sim;

pub use laws::{adaptive_input, weight_derivative, AdaptiveLaw, AdaptiveState, LawError};
pub use matrix::{
    eigenvalues, hurwitz_margin, is_spd, max_eigenvalue_symmetric, solve_least_squares,
    solve_lyapunov, Matrix, MatrixError,
};
pub use models::{
    build_regressor, compute_ideal_weights, evaluate_command, synthesize_nominal_gains,
    uncertainty_delta, CommandPrimitive, CommandProfile, IdealWeights, ModelError, NominalGains,
    PlantModel, ReferenceModel, UncertaintyModel,
};
pub use scaling::{
    compare_trajectories, run_scalability_check, run_scalability_check_with_workers,
    scale_scenario, AlphaCheck, Deviations, ScalabilityReport, ScaleError,
};
pub use scenario::{InitialState, Scenario, ScenarioError, ScenarioSpec, SimSettings, Violation};
pub use sim::{
    closed_loop_derivative, evaluate_step, governor_command, governor_derivative,
    governor_output, governor_projection, integrate, Architecture, ClosedLoopState, SimError,
    StepSignals, Trajectory,
};
