//! Deterministic numerical verification suites behind `abqc verify`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, budget, definetti_term, deviation_maximum, half_budget, min_k, min_m};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::{stabilizer_element, Pauli, PauliString, Phase};
use crate::state::{DensityState, Outcome, PureState, QuantumCopy};
use crate::tableau::StabilizerTableau;

pub const SUITES: [&str; 6] = [
    "povm-identity",
    "product-identity",
    "tradeoff-bound",
    "deviation-max",
    "parameter-minimality",
    "backend-equivalence",
];

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: u64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl VerifyReport {
    fn new(suite: &str, checks: u64, max_deviation: f64, tolerance: f64) -> Self {
        VerifyReport {
            suite: suite.to_string(),
            checks,
            max_deviation,
            tolerance,
            passed: max_deviation.is_finite() && max_deviation < tolerance,
        }
    }
}

pub fn run_suite(name: &str) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    match name {
        "povm-identity" => povm_identity(&[1, 2, 3], 20, &mut rng),
        "product-identity" => product_identity(&[1, 2], &[1, 2, 3], 20, &mut rng),
        "tradeoff-bound" => tradeoff_bound(&mut rng),
        "deviation-max" => deviation_max(50, 1e-6),
        "parameter-minimality" => parameter_minimality(50, 5, 50),
        "backend-equivalence" => {
            let mut graphs = Vec::new();
            for n in 1..=4 {
                graphs.extend(Graph::all_connected(n)?);
            }
            graphs.push(Graph::cycle(5)?);
            backend_equivalence(&graphs, 100, &mut rng)
        }
        other => Err(Error::Config(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
}

pub fn run_all() -> Result<Vec<VerifyReport>> {
    SUITES.iter().map(|s| run_suite(s)).collect()
}

/// Averages `(1 + Tr(g_S sigma)) / 2` over every subset and compares with `(1 + F) / 2`.
pub fn povm_identity(ns: &[usize], states: usize, rng: &mut dyn RngCore) -> Result<VerifyReport> {
    let mut worst = 0f64;
    let mut checks = 0;
    for &n in ns {
        let g = Graph::path(n)?;
        for _ in 0..states {
            let sigma = DensityState::random_mixture(n, rng)?;
            let mut sum = 0.0;
            for mask in 0..1usize << n {
                let subset: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                sum += (1.0 + sigma.pauli_expectation(&stabilizer_element(&g, &subset)?)?) / 2.0;
            }
            let lhs = sum / (1usize << n) as f64;
            let rhs = 0.5 + 0.5 * sigma.fidelity_with_graph(&g)?;
            worst = worst.max((lhs - rhs).abs());
            checks += 1;
        }
    }
    Ok(VerifyReport::new("povm-identity", checks, worst, 1e-10))
}

pub fn product_identity(ns: &[usize], ks: &[usize], states: usize, rng: &mut dyn RngCore) -> Result<VerifyReport> {
    let mut worst = 0f64;
    let mut checks = 0;
    for &n in ns {
        let g = Graph::path(n)?;
        for &k in ks {
            for _ in 0..states {
                let sigma = DensityState::random_mixture(n, rng)?;
                worst = worst.max(bounds::verify_product_identity(&sigma, &g, k)?.difference);
                checks += 1;
            }
        }
    }
    Ok(VerifyReport::new("product-identity", checks, worst, 1e-10))
}

/// Excess of sampled `Tr(T sigma)^k Tr(Pi sigma)` over the analytic maximum.
fn tradeoff_bound(rng: &mut dyn RngCore) -> Result<VerifyReport> {
    let mut worst = 0f64;
    let mut checks = 0;
    for n in 1..=3 {
        let g = Graph::path(n)?;
        let mut ks: Vec<u64> = (1..=6).collect();
        ks.push(min_k(n as u64)?);
        for k in ks {
            let check = bounds::verify_tradeoff_bound(&g, k, 200, rng)?;
            let excess = (check.max_value - check.analytic_max).max(0.0);
            worst = worst.max(if check.holds { excess } else { f64::INFINITY });
            checks += 1;
        }
    }
    Ok(VerifyReport::new("tradeoff-bound", checks, worst, 1e-9))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridMaximum {
    pub k: u64,
    pub argmax: f64,
    pub value: f64,
}

/// Brute-force maximum of `2 x^k (1 - x)` over a uniform grid on `[0, 1]`.
pub fn grid_maximum(k: u64, step: f64) -> GridMaximum {
    let points = (1.0 / step).round() as u64;
    let (mut argmax, mut value) = (0.0, f64::NEG_INFINITY);
    for i in 0..=points {
        let x = i as f64 / points as f64;
        let v = 2.0 * x.powi(k as i32) * (1.0 - x);
        if v > value {
            argmax = x;
            value = v;
        }
    }
    GridMaximum { k, argmax, value }
}

/// Grid search for `k = 1..=max_k`. Reports the largest excess of the grid
/// maximum over the analytic one; a misplaced argmax counts as infinite.
pub fn deviation_max(max_k: u64, step: f64) -> Result<VerifyReport> {
    let grids: Vec<GridMaximum> = (1..=max_k).into_par_iter().map(|k| grid_maximum(k, step)).collect();
    let mut worst = 0f64;
    for grid in &grids {
        let exact = deviation_maximum(grid.k)?;
        let argmax_ok = (grid.argmax - exact.argmax).abs() <= 1e-5;
        let bound_ok = exact.value <= exact.bound;
        let excess = (grid.value - exact.value).max(0.0);
        worst = worst.max(if argmax_ok && bound_ok { excess } else { f64::INFINITY });
    }
    Ok(VerifyReport::new("deviation-max", max_k, worst, 1e-9))
}

/// Minimality of `min_k` and `min_m`, and the budget at the minimal parameters.
/// Reports the number of violations.
pub fn parameter_minimality(max_n_k: u64, max_n_m: u64, max_k_m: u64) -> Result<VerifyReport> {
    let mut violations = 0u64;
    let mut checks = 0u64;
    for n in 1..=max_n_k {
        let k = min_k(n)?;
        let half = half_budget(n);
        let ok = k == 4 * n * n - 1 && 2.0 / (k as f64 + 1.0) <= half && 2.0 / k as f64 > half;
        violations += u64::from(!ok);
        let b = budget(n, k, min_m(n, k)?)?;
        violations += u64::from(!(b.satisfied && b.total <= 1.0 / (n * n) as f64));
        checks += 2;
    }
    for n in 1..=max_n_m {
        let half = half_budget(n);
        for k in 1..=max_k_m {
            let m = min_m(n, k)?;
            let ok = definetti_term(k, n, m)? <= half && (m == 1 || definetti_term(k, n, m - 1)? > half);
            violations += u64::from(!ok);
            checks += 1;
        }
    }
    Ok(VerifyReport::new("parameter-minimality", checks, violations as f64, 0.5))
}

fn random_pauli(n: usize, rng: &mut dyn RngCore) -> PauliString {
    let letters = (0..n).map(|_| Pauli::from_bits(rng.random(), rng.random())).collect();
    let phase = if rng.random() { Phase::PLUS_ONE } else { Phase::MINUS_ONE };
    PauliString::new(phase, letters)
}

/// Runs the same random measurement sequence on the dense and tableau
/// simulators and returns the largest outcome-probability mismatch.
pub fn backend_equivalence(graphs: &[Graph], measurements: usize, rng: &mut dyn RngCore) -> Result<VerifyReport> {
    let mut worst = 0f64;
    let mut checks = 0;
    for g in graphs {
        let n = g.n();
        let mut dense = PureState::graph_state(g)?;
        let mut tab = StabilizerTableau::from_graph(g)?;
        for i in 0..measurements {
            // Alternate between signed stabilizer-group elements of G and arbitrary Paulis.
            let p = if i % 2 == 0 {
                let subset: Vec<usize> = (0..n).filter(|_| rng.random()).collect();
                let e = stabilizer_element(g, &subset)?;
                if rng.random() { e.negated() } else { e }
            } else {
                random_pauli(n, rng)
            };
            let pd = (1.0 + dense.pauli_expectation(&p)?) / 2.0;
            let pt = (1.0 + tab.pauli_expectation(&p)?) / 2.0;
            worst = worst.max((pd - pt).abs());
            checks += 1;
            let outcome = if rng.random::<f64>() < pd { Outcome::Plus } else { Outcome::Minus };
            let qd = dense.project_pauli(&p, outcome)?;
            let qt = tab.project_pauli(&p, outcome)?;
            worst = worst.max((qd - qt).abs());
            worst = worst.max((dense.fidelity_with_graph(g)? - tab.fidelity_with_graph(g)?).abs());
        }
    }
    Ok(VerifyReport::new("backend-equivalence", checks, worst, 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_finds_the_quadratic_peak() {
        let g = grid_maximum(1, 1e-3);
        assert!((g.argmax - 0.5).abs() < 1e-12);
        assert!((g.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fast_suites_pass() {
        for name in ["povm-identity", "parameter-minimality", "tradeoff-bound"] {
            let r = run_suite(name).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(backend_equivalence(&[Graph::path(3).unwrap()], 40, &mut rng).unwrap().passed);
        assert!(deviation_max(5, 1e-6).unwrap().passed);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope"), Err(Error::Config(_))));
    }
}
