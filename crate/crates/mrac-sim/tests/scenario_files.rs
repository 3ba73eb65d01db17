//! Shipped-scenario health: every file in scenarios/ validates, survives a
//! serialize/parse round trip, and the validator pinpoints planted faults.

mod common;

use common::{load_spec, scenario_path};
use mrac_sim::scenario::{
    parse_scenario_str, serialize_scenario, Scenario, ScenarioError,
};
use mrac_sim::sim;

const SHIPPED: &[&str] = &[
    "standard",
    "sigma_mod",
    "e_mod",
    "freq_limited",
    "clrm",
    "governor",
    "zero_uncertainty",
];

#[test]
fn shipped_scenarios_validate() {
    for name in SHIPPED {
        let spec = load_spec(name);
        let scn = Scenario::from_spec(&spec)
            .unwrap_or_else(|e| panic!("{name} failed validation:\n{e}"));
        assert!(
            scn.warnings.is_empty(),
            "{name} has unexpected warnings: {:?}",
            scn.warnings
        );
    }
}

#[test]
fn shipped_scenarios_roundtrip() {
    for name in SHIPPED {
        let path = scenario_path(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let spec = parse_scenario_str(&text).unwrap();
        let serialized = serialize_scenario(&spec).unwrap();
        let reparsed = parse_scenario_str(&serialized)
            .unwrap_or_else(|e| panic!("{name} reparse failed: {e}\n{serialized}"));
        assert_eq!(spec, reparsed, "{name} did not round-trip");
    }
}

#[test]
fn freq_limited_filter_defaults_to_initial_weights() {
    let spec = load_spec("freq_limited");
    let scn = Scenario::from_spec(&spec).unwrap();
    let state = sim::initial_state(&scn);
    assert_eq!(state.weights.w_hat_f.as_ref(), Some(&scn.initial.w_hat0));
}

fn violations_of(text: &str) -> Vec<String> {
    match Scenario::from_toml_str(text) {
        Err(ScenarioError::Validation(v)) => v.iter().map(|v| v.to_string()).collect(),
        Err(ScenarioError::Parse(e)) => panic!("unexpected parse error: {e}"),
        Ok(_) => panic!("expected validation failure"),
    }
}

fn standard_text() -> String {
    std::fs::read_to_string(scenario_path("standard")).unwrap()
}

#[test]
fn validator_names_the_hurwitz_check() {
    let text = standard_text().replace(
        "a_r = [[0.0, 1.0], [-4.0, -2.8]]",
        "a_r = [[0.0, 1.0], [4.0, 2.8]]",
    );
    let violations = violations_of(&text);
    assert!(
        violations.iter().any(|v| v.contains("Hurwitz") && v.contains("system-models")),
        "{violations:?}"
    );
}

#[test]
fn validator_names_the_spd_check() {
    let text = standard_text().replace(
        "q = \"identity\"",
        "q = [[1.0, 2.0], [0.0, 1.0]]",
    );
    let violations = violations_of(&text);
    assert!(
        violations.iter().any(|v| v.contains("is_spd") && v.contains("matrix-core")),
        "{violations:?}"
    );
}

#[test]
fn validator_catches_governor_dimension_rule() {
    // two commands but one input: the governor needs m == l
    let text = standard_text()
        .replace("b_r = [[0.0], [4.0]]", "b_r = [[0.0, 0.0], [4.0, 1.0]]")
        .replace("w_c = [[0.3]]", "w_c = [[0.3], [0.0]]")
        .replace("amplitude = [1.0]", "amplitude = [1.0, 0.0]")
        .replace("amplitude = [0.5]", "amplitude = [0.5, 0.0]")
        .replace(
            "[architecture]\nkind = \"plain\"",
            "[architecture]\nkind = \"governor\"\nlambda_gov = 10.0",
        );
    let violations = violations_of(&text);
    assert!(
        violations.iter().any(|v| v.contains("l (2) to equal") && v.contains("closed-loop-sim")),
        "{violations:?}"
    );
}

#[test]
fn validator_collects_multiple_violations_at_once() {
    let text = standard_text()
        .replace("a_r = [[0.0, 1.0], [-4.0, -2.8]]", "a_r = [[0.0, 1.0], [4.0, 2.8]]")
        .replace("q = \"identity\"", "q = [[1.0, 2.0], [0.0, 1.0]]")
        .replace("dt = 0.001", "dt = -0.5");
    let violations = violations_of(&text);
    assert!(violations.len() >= 3, "{violations:?}");
}

#[test]
fn validator_rejects_law_parameter_mixups() {
    // sigma on a standard law
    let text = standard_text().replace(
        "kind = \"standard\"\ngamma = 10.0",
        "kind = \"standard\"\ngamma = 10.0\nsigma = 0.1",
    );
    let violations = violations_of(&text);
    assert!(violations.iter().any(|v| v.contains("law.sigma")), "{violations:?}");

    // e-mod without sigma_e
    let text = standard_text().replace(
        "kind = \"standard\"\ngamma = 10.0",
        "kind = \"e-mod\"\ngamma = 10.0",
    );
    let violations = violations_of(&text);
    assert!(violations.iter().any(|v| v.contains("law.sigma_e")), "{violations:?}");

    // filter eigenvalue bound
    let text = standard_text().replace(
        "kind = \"standard\"\ngamma = 10.0",
        "kind = \"freq-limited\"\ngamma = 10.0\nsigma = 1.0\ngamma_f = 2.0\ngamma_f_max = 1.0",
    );
    let violations = violations_of(&text);
    assert!(
        violations.iter().any(|v| v.contains("gamma_f") && v.contains("exceeds")),
        "{violations:?}"
    );
}

#[test]
fn validator_rejects_uncontrollable_pair() {
    let text = standard_text()
        .replace("a = [[0.0, 1.0], [-1.0, -0.5]]", "a = [[-1.0, 0.0], [0.0, -2.0]]")
        .replace("b = [[0.0], [1.0]]", "b = [[1.0], [0.0]]")
        // keep the matching conditions satisfiable for the modified pair
        .replace("a_r = [[0.0, 1.0], [-4.0, -2.8]]", "a_r = [[-3.0, 0.0], [0.0, -2.0]]")
        .replace("b_r = [[0.0], [4.0]]", "b_r = [[4.0], [0.0]]")
        .replace("w_x = [[0.6], [-0.4]]", "w_x = [[0.6], [0.0]]");
    let violations = violations_of(&text);
    assert!(violations.iter().any(|v| v.contains("not controllable")), "{violations:?}");
}

#[test]
fn validator_rejects_stray_reference_feedback() {
    let text = standard_text().replace(
        "x_r0 = [0.0, 0.0]",
        "x_r0 = [0.0, 0.0]\nl_feedback = [[5.0, 0.0], [0.0, 5.0]]",
    );
    let violations = violations_of(&text);
    assert!(violations.iter().any(|v| v.contains("l_feedback")), "{violations:?}");
}

#[test]
fn validator_rejects_fractional_step_count() {
    let text = standard_text().replace("duration = 30.0", "duration = 30.0005");
    let violations = violations_of(&text);
    assert!(violations.iter().any(|v| v.contains("integral number")), "{violations:?}");
}

#[test]
fn explicit_gain_overrides_are_checked_against_matching_conditions() {
    // the gains the synthesis would produce; accepted as overrides
    let good = standard_text().replace(
        "q = \"identity\"",
        "q = \"identity\"\nk_x = [[3.0, 2.3]]\nk_c = [[4.0]]",
    );
    let scn = Scenario::from_toml_str(&good).unwrap();
    assert_eq!(scn.gains.k_x.row(0), &[3.0, 2.3]);

    // a wrong feedback gain violates A - B K_x = A_r
    let bad = standard_text().replace(
        "q = \"identity\"",
        "q = \"identity\"\nk_x = [[1.0, 1.0]]\nk_c = [[4.0]]",
    );
    let violations = violations_of(&bad);
    assert!(
        violations.iter().any(|v| v.contains("matching-condition-violated")),
        "{violations:?}"
    );

    // one override without the other is rejected
    let half = standard_text().replace(
        "q = \"identity\"",
        "q = \"identity\"\nk_c = [[4.0]]",
    );
    let violations = violations_of(&half);
    assert!(violations.iter().any(|v| v.contains("both")), "{violations:?}");
}

#[test]
fn step_commands_warn_but_validate() {
    let text = standard_text().replace(
        "[[command]]\ntype = \"sine\"\namplitude = [1.0]\nfrequency_hz = 0.1\nphase = 0.0",
        "[[command]]\ntype = \"step\"\nt_on = 1.0\nlevel = [1.0]",
    );
    let scn = Scenario::from_toml_str(&text).unwrap();
    assert!(scn.warnings.iter().any(|w| w.contains("step")), "{:?}", scn.warnings);
}

#[test]
fn parse_errors_carry_context() {
    let err = Scenario::from_toml_str("plant = 3").unwrap_err();
    match err {
        ScenarioError::Parse(msg) => assert!(!msg.is_empty()),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn full_lambda_needs_the_flag() {
    let skewed = standard_text().replace("lambda = [[0.7]]", "lambda = [[-0.7]]");
    let violations = violations_of(&skewed);
    assert!(violations.iter().any(|v| v.contains("lambda")), "{violations:?}");

    // same matrix accepted behind the flag when invertible
    let flagged = skewed.replace(
        "lambda = [[-0.7]]",
        "lambda = [[-0.7]]\nallow_full_lambda = true",
    );
    let scn = Scenario::from_toml_str(&flagged).unwrap();
    assert!(scn.warnings.iter().any(|w| w.contains("allow_full_lambda")), "{:?}", scn.warnings);
}
