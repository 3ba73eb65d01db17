//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured margins (`cargo test --test acceptance --
//! --nocapture` to see them).

mod common;

use std::time::Instant;

use common::{load_scenario, load_spec, random_hurwitz, SplitMix64};
use mrac_sim::laws::AdaptiveLaw;
use mrac_sim::matrix::{is_spd, solve_lyapunov, vec_inf_norm, Matrix};
use mrac_sim::models::{build_regressor, compute_ideal_weights};
use mrac_sim::report::trajectory_csv;
use mrac_sim::scaling::{run_scalability_check, scale_scenario, compare_trajectories};
use mrac_sim::scenario::Scenario;
use mrac_sim::sim::{closed_loop_derivative, integrate, Architecture, Trajectory};

const TOL: f64 = 1e-9;

/// Criterion 1: Lyapunov solver residual and positive definiteness over
/// 50 random Hurwitz matrices, n in 2..=10, inside 5 seconds.
#[test]
fn criterion_1_lyapunov_correctness() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let mut worst_residual = 0.0f64;
    for trial in 0..50 {
        let n = 2 + trial % 9;
        let a_r = random_hurwitz(&mut rng, n);
        let q = Matrix::identity(n);
        let p = solve_lyapunov(&a_r, &q).expect("lyapunov solvable for Hurwitz a_r");
        let residual = q
            .add(&a_r.transpose().matmul(&p).unwrap())
            .unwrap()
            .add(&p.matmul(&a_r).unwrap())
            .unwrap()
            .frobenius_norm();
        let bound = 1e-10 * q.frobenius_norm().max(1.0);
        assert!(residual <= bound, "trial {trial} (n={n}): residual {residual:.3e} > {bound:.3e}");
        assert!(is_spd(&p), "trial {trial} (n={n}): P not SPD");
        worst_residual = worst_residual.max(residual);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.2} s, budget 5 s");
    println!(
        "criterion 1 PASS: 50 Lyapunov solves, worst residual {worst_residual:.3e}, {elapsed:.2} s"
    );
}

fn assert_scalable(name: &str, scn: &Scenario, alphas: &[f64]) {
    let report = run_scalability_check(scn, alphas, TOL).expect("check runs");
    for check in &report.checks {
        let dev = check
            .deviations
            .unwrap_or_else(|| panic!("{name} alpha {}: {:?}", check.alpha, check.error));
        assert!(
            dev.state <= TOL,
            "{name} alpha {}: state deviation {:.3e}",
            check.alpha,
            dev.state
        );
        assert!(
            dev.weight <= TOL,
            "{name} alpha {}: weight deviation {:.3e}",
            check.alpha,
            dev.weight
        );
        assert!(
            dev.input <= TOL,
            "{name} alpha {}: input deviation {:.3e}",
            check.alpha,
            dev.input
        );
        assert!(
            dev.ref_state <= TOL && dev.command <= TOL,
            "{name} alpha {}: reference/command deviation {:.3e}/{:.3e}",
            check.alpha,
            dev.ref_state,
            dev.command
        );
    }
    assert!(report.pass);
    let worst = report
        .checks
        .iter()
        .filter_map(|c| c.deviations.map(|d| d.max()))
        .fold(0.0f64, f64::max);
    println!("  {name}: alphas {alphas:?}, worst deviation {worst:.3e}");
}

/// Criterion 2: the headline scaling property on the standard benchmark,
/// alpha in {0.5, 2, 5, -2}, every deviation within 1e-9, inside 10 s.
#[test]
fn criterion_2_scalability_standard() {
    let start = Instant::now();
    let scn = load_scenario("standard");
    assert_scalable("standard", &scn, &[0.5, 2.0, 5.0, -2.0]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.2} s, budget 10 s");
    println!("criterion 2 PASS: standard benchmark scales, {elapsed:.2} s");
}

/// Criterion 3: the same property across the remaining architectures
/// (e-modification restricted to positive alpha).
#[test]
fn criterion_3_architecture_coverage() {
    let full = [0.5, 2.0, 5.0, -2.0];
    let positive = [0.5, 2.0, 5.0];
    assert_scalable("sigma_mod", &load_scenario("sigma_mod"), &full);
    assert_scalable("e_mod", &load_scenario("e_mod"), &positive);
    assert_scalable("freq_limited", &load_scenario("freq_limited"), &full);
    assert_scalable("clrm", &load_scenario("clrm"), &full);
    let governor = load_scenario("governor");
    assert!(matches!(governor.architecture, Architecture::CommandGovernor { lambda } if lambda == 50.0));
    assert_scalable("governor", &governor, &full);
    println!("criterion 3 PASS: sigma-mod, e-mod, freq-limited, clrm, governor all scale");
}

/// Criterion 4: test power. Scaling the learning rate by 1/alpha instead
/// of 1/alpha^2 must blow the state deviation past 1e-3.
#[test]
fn criterion_4_negative_control() {
    let nominal = load_scenario("standard");
    let alpha = 2.0;
    let mut wrong = scale_scenario(&nominal, alpha).unwrap();
    // overwrite the correctly scaled gamma with the wrong power
    let bad_gamma = nominal.law.gamma().div_scalar(alpha);
    wrong.law = AdaptiveLaw::StandardMrac { gamma: bad_gamma };
    let base = integrate(&nominal).unwrap();
    let traj = integrate(&wrong).unwrap();
    let dev = compare_trajectories(&base, &traj, alpha).unwrap();
    assert!(
        dev.state > 1e-3,
        "mis-scaled learning rate went undetected: state deviation {:.3e}",
        dev.state
    );
    println!(
        "criterion 4 PASS: wrong-power gamma detected, state deviation {:.3e} (>= 6 orders above 1e-9)",
        dev.state
    );
}

fn dual_form_max_rel(scn: &Scenario, traj: &Trajectory) -> (f64, f64) {
    let ideal = compute_ideal_weights(&scn.plant, &scn.uncertainty, &scn.gains).unwrap();
    let mut worst_dual = 0.0f64;
    let mut worst_gov = 0.0f64;
    for k in 0..traj.len() {
        let state = &traj.states[k];
        let d = closed_loop_derivative(scn, state, traj.times[k]).unwrap();
        let omega = build_regressor(&state.x, &traj.c_total[k], scn.kappa);
        // dual form: A_r x + B_r c - B Lambda (W_hat - W)ᵀ omega
        let w_tilde = state.weights.w_hat.sub(&ideal.w).unwrap();
        let wt_omega = w_tilde.tr_mul_vec(&omega).unwrap();
        let blw = scn
            .plant
            .b
            .mul_vec(&scn.plant.lambda.mul_vec(&wt_omega).unwrap())
            .unwrap();
        let arx = scn.reference.a_r.mul_vec(&state.x).unwrap();
        let brc = scn.reference.b_r.mul_vec(&traj.c_total[k]).unwrap();
        let n = arx.len();
        let dual: Vec<f64> = (0..n).map(|i| arx[i] + brc[i] - blw[i]).collect();
        let scale = 1.0 + vec_inf_norm(&d.x);
        let diff = (0..n).map(|i| (d.x[i] - dual[i]).abs()).fold(0.0, f64::max);
        worst_dual = worst_dual.max(diff / scale);

        if matches!(scn.architecture, Architecture::CommandGovernor { .. }) {
            // error dynamics: e' = A_r e - B Lambda W_tildeᵀ omega
            let e = &traj.e[k];
            let are = scn.reference.a_r.mul_vec(e).unwrap();
            let de_sim: Vec<f64> = (0..n).map(|i| d.x[i] - d.x_r[i]).collect();
            let de_pred: Vec<f64> = (0..n).map(|i| are[i] - blw[i]).collect();
            let scale = 1.0 + vec_inf_norm(&de_sim);
            let diff = (0..n).map(|i| (de_sim[i] - de_pred[i]).abs()).fold(0.0, f64::max);
            worst_gov = worst_gov.max(diff / scale);
        }
    }
    (worst_dual, worst_gov)
}

/// Criterion 5: along every recorded step of every benchmark, the primal
/// plant derivative matches the error-system form within 1e-9 relative,
/// and governor runs additionally satisfy the unchanged error dynamics.
#[test]
fn criterion_5_closed_loop_algebra() {
    let names = ["standard", "sigma_mod", "e_mod", "freq_limited", "clrm", "governor"];
    let mut worst_dual = 0.0f64;
    let mut worst_gov = 0.0f64;
    for name in names {
        let scn = load_scenario(name);
        let traj = integrate(&scn).unwrap();
        let (dual, gov) = dual_form_max_rel(&scn, &traj);
        assert!(dual <= TOL, "{name}: dual-form deviation {dual:.3e}");
        assert!(gov <= TOL, "{name}: governor error-dynamics deviation {gov:.3e}");
        worst_dual = worst_dual.max(dual);
        worst_gov = worst_gov.max(gov);
    }
    println!(
        "criterion 5 PASS: dual-form max {worst_dual:.3e}, governor error-dynamics max {worst_gov:.3e}"
    );
}

fn governor_tracking_sup(lambda: f64) -> f64 {
    let mut spec = load_spec("governor");
    spec.architecture.lambda_gov = Some(lambda);
    let scn = Scenario::from_spec(&spec).unwrap();
    let traj = integrate(&scn).unwrap();
    let mut sup = 0.0f64;
    for k in 0..traj.len() {
        let x = &traj.states[k].x;
        let xrd = traj.x_r_desired(k).expect("governor records x_r_des");
        let dev = (0..x.len()).map(|i| (x[i] - xrd[i]).abs()).fold(0.0, f64::max);
        sup = sup.max(dev);
    }
    sup
}

/// Criterion 6: raising the governor gain from 1 to 100 must cut the
/// worst-case distance to the desired reference by more than half.
#[test]
fn criterion_6_governor_limit() {
    let low = governor_tracking_sup(1.0);
    let high = governor_tracking_sup(100.0);
    assert!(
        high < 0.5 * low,
        "sup |x - x_rD| did not shrink: lambda=1 gives {low:.4e}, lambda=100 gives {high:.4e}"
    );
    println!(
        "criterion 6 PASS: sup |x - x_rD| = {low:.4e} at lambda=1 vs {high:.4e} at lambda=100 \
         (ratio {:.3})",
        high / low
    );
}

/// Criterion 7: with no uncertainty and matched initial conditions the
/// error system sits at its equilibrium to the rounding floor.
#[test]
fn criterion_7_trivial_equilibrium() {
    let scn = load_scenario("zero_uncertainty");
    let traj = integrate(&scn).unwrap();
    let sup_e = traj.sup_e_inf();
    let sup_u_ad = traj.sup_u_ad_inf();
    assert!(sup_e <= 1e-12, "sup |e| = {sup_e:.3e}");
    assert!(sup_u_ad <= 1e-12, "sup |u_ad| = {sup_u_ad:.3e}");
    println!("criterion 7 PASS: sup|e| = {sup_e:.3e}, sup|u_ad| = {sup_u_ad:.3e}");
}

const SCALAR_DECAY: &str = r#"
name = "scalar exponential decay"

[plant]
a = [[-1.0]]
b = [[1.0]]
lambda = [[1.0]]

[uncertainty]
w_x = [[0.0]]
w_c = [[0.0]]
w_kappa = [0.0]

[reference]
a_r = [[-1.0]]
b_r = [[0.0]]
x_r0 = [1.0]

[law]
kind = "standard"
gamma = 1.0

[architecture]
kind = "plain"

[sim]
dt = 0.001
duration = 1.0

[initial]
x0 = [1.0]
"#;

/// Criterion 8: RK4 reproduces the scalar exponential within 1e-9 at
/// t = 1, and repeated runs serialize to identical bytes.
#[test]
fn criterion_8_integrator_sanity() {
    let scn = Scenario::from_toml_str(SCALAR_DECAY).unwrap();
    let traj = integrate(&scn).unwrap();
    assert_eq!(traj.len(), 1001);
    let x_r_final = traj.states.last().unwrap().x_r[0];
    let exact = (-1.0f64).exp();
    let err = (x_r_final - exact).abs();
    assert!(err <= 1e-9, "x_r(1) = {x_r_final}, expected {exact}, err {err:.3e}");

    let again = integrate(&scn).unwrap();
    assert_eq!(trajectory_csv(&traj, &scn), trajectory_csv(&again, &scn));

    let standard = load_scenario("standard");
    let a = trajectory_csv(&integrate(&standard).unwrap(), &standard);
    let b = trajectory_csv(&integrate(&standard).unwrap(), &standard);
    assert_eq!(a, b, "standard benchmark runs are not byte-identical");
    println!("criterion 8 PASS: |x_r(1) - exp(-1)| = {err:.3e}, runs byte-identical");
}
