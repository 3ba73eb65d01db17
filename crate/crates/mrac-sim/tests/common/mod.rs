//! Shared fixtures for the integration test suites.
#![allow(dead_code)] // each test binary uses a different subset

use mrac_sim::matrix::Matrix;
use mrac_sim::scenario::{parse_scenario_str, Scenario, ScenarioSpec};

/// Small deterministic RNG so frozen expected values stay frozen.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Stable companion matrix built from real roots and complex-conjugate
/// pairs (given as `(re, im)` with `im > 0`). Hurwitz when every real
/// part is negative.
pub fn companion_from_roots(reals: &[f64], pairs: &[(f64, f64)]) -> Matrix {
    let n = reals.len() + 2 * pairs.len();
    assert!(n >= 1);
    let mut coeffs = vec![0.0f64; n + 1];
    coeffs[0] = 1.0;
    let mut deg = 0;
    for &re in reals {
        // multiply by (s - re)
        for k in (0..=deg).rev() {
            coeffs[k + 1] += coeffs[k];
            coeffs[k] *= -re;
        }
        deg += 1;
    }
    for &(re, im) in pairs {
        // multiply by (s^2 - 2 re s + re^2 + im^2)
        let b = -2.0 * re;
        let c = re * re + im * im;
        let old = coeffs.clone();
        for k in 0..=deg {
            coeffs[k] = old[k] * c;
        }
        for k in 0..=deg {
            coeffs[k + 1] += old[k] * b;
        }
        for k in 0..=deg {
            coeffs[k + 2] += old[k];
        }
        deg += 2;
    }
    let mut m = Matrix::zeros(n, n);
    for r in 0..n - 1 {
        m.set(r, r + 1, 1.0);
    }
    for j in 0..n {
        m.set(n - 1, j, -coeffs[j]);
    }
    m
}

/// Hurwitz matrix in companion form built from random stable roots.
pub fn random_hurwitz(rng: &mut SplitMix64, n: usize) -> Matrix {
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        if remaining >= 2 && rng.next_f64() < 0.5 {
            pairs.push((-rng.range(0.5, 3.0), rng.range(0.3, 2.0)));
            remaining -= 2;
        } else {
            reals.push(-rng.range(0.5, 3.0));
            remaining -= 1;
        }
    }
    companion_from_roots(&reals, &pairs)
}

pub fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/{}.toml", env!("CARGO_MANIFEST_DIR"), name)
}

pub fn load_spec(name: &str) -> ScenarioSpec {
    let path = scenario_path(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {path}: {e}"));
    parse_scenario_str(&text).unwrap_or_else(|e| panic!("cannot parse {path}: {e}"))
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::from_spec(&load_spec(name))
        .unwrap_or_else(|e| panic!("scenario {name} failed validation: {e}"))
}
