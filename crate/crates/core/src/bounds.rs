//! Closed-form soundness bounds and parameter constraints, plus dense
//! brute-force checks of each step of the bound.
//!
//! Notation: `T` is the pass operator of one honesty test,
//! `Tr(T sigma) = (1 + F) / 2` with `F = <G|sigma|G>`, and `Pi` is the
//! projector `I - |G><G|`.

use std::f64::consts::LN_2;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::CMatrix;
use crate::pauli::Pauli;
use crate::pauli::PauliString;
use crate::state::{DensityState, PureState, QuantumCopy, ALGEBRA_TOL, DENSE_QUBIT_CAP};

fn check_unit(x: f64, what: &'static str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfRange { value: x, range: what })
    }
}

/// `(1 + F) / 2`.
pub fn pass_probability(fidelity: f64) -> Result<f64> {
    check_unit(fidelity, "[0, 1]")?;
    Ok((1.0 + fidelity) / 2.0)
}

/// `2 x^k (1 - x)`: the joint pass-and-deviate weight for iid copies with `Tr(T sigma) = x`.
pub fn deviation_value(x: f64, k: u64) -> Result<f64> {
    check_unit(x, "[0, 1]")?;
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    Ok(2.0 * x.powf(k as f64) * (1.0 - x))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationMaximum {
    pub argmax: f64,
    pub value: f64,
    /// `2 / (k + 1)`, the looser bound used in the soundness budget.
    pub bound: f64,
}

pub fn deviation_maximum(k: u64) -> Result<DeviationMaximum> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let kf = k as f64;
    let argmax = kf / (kf + 1.0);
    Ok(DeviationMaximum {
        argmax,
        value: 2.0 * argmax.powf(kf) / (kf + 1.0),
        bound: 2.0 / (kf + 1.0),
    })
}

/// `1 / (2 n^2)`, each half of the soundness budget.
pub fn half_budget(n: u64) -> f64 {
    let nf = n as f64;
    1.0 / (2.0 * nf * nf)
}

/// Least `k` with `2 / (k + 1) <= 1 / (2 n^2)`, i.e. `4 n^2 - 1`.
pub fn min_k(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    n.checked_mul(n)
        .and_then(|sq| sq.checked_mul(4))
        .map(|v| v - 1)
        .ok_or_else(|| Error::InvalidParams(format!("4n^2 - 1 overflows for n = {n}")))
}

/// `1/2 * sqrt(2 k^2 n ln 2 / m)`.
pub fn definetti_term(k: u64, n: u64, m: u64) -> Result<f64> {
    definetti_term_real(k, n, m as f64)
}

/// Same as [`definetti_term`] for a real-valued `m`.
pub fn definetti_term_real(k: u64, n: u64, m: f64) -> Result<f64> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidParams(format!("m must be positive, got {m}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    Ok(0.5 * (2.0 * kf * kf * nf * LN_2 / m).sqrt())
}

/// Which reading of the discard-count constraint to use.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardBound {
    /// `2 ln2 k^2 n^5`, obtained by solving `definetti_term <= 1 / (2 n^2)`.
    #[default]
    Derived,
    /// `2 ln2 k^n n^5`, the form stated alongside the protocol parameters.
    TextForm,
}

/// Least integer `m` with `definetti_term(k, n, m) <= 1 / (2 n^2)`, i.e. `ceil(2 ln2 k^2 n^5)`.
pub fn min_m(n: u64, k: u64) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParams("n and k must be at least 1".into()));
    }
    let (kf, nf) = (k as f64, n as f64);
    let estimate = (2.0 * LN_2 * kf * kf * nf.powi(5)).ceil();
    if !estimate.is_finite() || estimate >= u64::MAX as f64 {
        return Err(Error::InvalidParams(format!("min_m too large for n = {n}, k = {k}")));
    }
    if estimate > 2f64.powi(53) {
        // Neighbouring integers are indistinguishable in f64 here.
        return Ok(estimate as u64);
    }
    let bound = half_budget(n);
    let mut m = (estimate as u64).max(1);
    // settle rounding at the integer boundary
    while definetti_term(k, n, m)? > bound {
        m += 1;
    }
    while m > 1 && definetti_term(k, n, m - 1)? <= bound {
        m -= 1;
    }
    Ok(m)
}

/// `ceil(2 ln2 k^n n^5)` as a real; overflows to infinity for large inputs.
pub fn min_m_text_form(n: u64, k: u64) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    (2.0 * LN_2 * kf.powf(nf) * nf.powi(5)).ceil()
}

pub fn min_m_with(form: DiscardBound, n: u64, k: u64) -> Result<f64> {
    match form {
        DiscardBound::Derived => min_m(n, k).map(|m| m as f64),
        DiscardBound::TextForm => Ok(min_m_text_form(n, k)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessBudget {
    pub n: u64,
    pub k: u64,
    pub m: f64,
    pub max_deviation_term: f64,
    pub definetti_term: f64,
    pub total: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

pub fn budget(n: u64, k: u64, m: u64) -> Result<SoundnessBudget> {
    budget_real(n, k, m as f64)
}

/// Budget for a real-valued discard count (the text-form `m` can exceed `u64`).
pub fn budget_real(n: u64, k: u64, m: f64) -> Result<SoundnessBudget> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let max_deviation_term = deviation_maximum(k)?.bound;
    let definetti_term = definetti_term_real(k, n, m)?;
    let total = max_deviation_term + definetti_term;
    let threshold = 2.0 * half_budget(n);
    Ok(SoundnessBudget {
        n,
        k,
        m,
        max_deviation_term,
        definetti_term,
        total,
        threshold,
        satisfied: total <= threshold,
    })
}

/// Dense `T = (I + |G><G|) / 2`.
pub fn pass_operator(g: &Graph) -> Result<CMatrix> {
    let dim = 1usize << g.n();
    let proj = CMatrix::outer(PureState::graph_state(g)?.amplitudes());
    Ok(CMatrix::identity(dim).add(&proj).scale(0.5))
}

/// Dense `I - |G><G|`.
pub fn orthogonal_projector(g: &Graph) -> Result<CMatrix> {
    let dim = 1usize << g.n();
    let proj = CMatrix::outer(PureState::graph_state(g)?.amplitudes());
    Ok(CMatrix::identity(dim).sub(&proj))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductIdentity {
    /// `Tr[(T^{⊗k} ⊗ Pi) sigma^{⊗(k+1)}]` from the full joint operator.
    pub lhs: f64,
    /// `Tr(T sigma)^k Tr(Pi sigma)`.
    pub rhs: f64,
    pub difference: f64,
}

pub fn verify_product_identity(sigma: &DensityState, g: &Graph, k: usize) -> Result<ProductIdentity> {
    if sigma.n() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), actual: sigma.n() });
    }
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let total = g.n() * (k + 1);
    if total > DENSE_QUBIT_CAP {
        return Err(Error::DenseCapExceeded { qubits: total, cap: DENSE_QUBIT_CAP });
    }
    let t = pass_operator(g)?;
    let pi = orthogonal_projector(g)?;
    let mut joint_op = t.clone();
    for _ in 1..k {
        joint_op = joint_op.kron(&t);
    }
    joint_op = joint_op.kron(&pi);
    let joint_state = sigma.tensor_power(k + 1)?;
    let lhs = joint_op.trace_product(joint_state.matrix()).re;
    let pass = t.trace_product(sigma.matrix()).re;
    let deviate = pi.trace_product(sigma.matrix()).re;
    let rhs = pass.powi(k as i32) * deviate;
    Ok(ProductIdentity { lhs, rhs, difference: (lhs - rhs).abs() })
}

/// A state with fidelity exactly `f` for any `f` in `[0, 1]`: depolarised
/// when possible, otherwise mixed with the orthogonal state `Z_0 |G>`.
pub fn state_with_fidelity(g: &Graph, f: f64) -> Result<DensityState> {
    check_unit(f, "[0, 1]")?;
    let floor = 1.0 / (1usize << g.n()) as f64;
    if f >= floor {
        return DensityState::depolarized_graph_state(g, f);
    }
    let good = PureState::graph_state(g)?;
    let mut bad = good.clone();
    bad.apply_pauli(&PauliString::single(g.n(), 0, Pauli::Z))?;
    DensityState::mix(f, &good.to_density(), &bad.to_density())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCheck {
    pub n: u64,
    pub k: u64,
    pub samples: usize,
    pub max_value: f64,
    /// Value at the analytic maximiser, evaluated on an actual state.
    pub value_at_argmax: f64,
    pub analytic_max: f64,
    pub bound: f64,
    /// `1 / (2 n^2)`, claimed only when `k >= 4 n^2 - 1`.
    pub claimed_bound: Option<f64>,
    pub holds: bool,
}

/// Samples random states and evaluates `Tr(T sigma)^k Tr(Pi sigma)` with dense traces.
pub fn verify_tradeoff_bound(g: &Graph, k: u64, samples: usize, rng: &mut dyn RngCore) -> Result<TradeoffCheck> {
    let n = g.n() as u64;
    let max = deviation_maximum(k)?;
    let t = pass_operator(g)?;
    let pi = orthogonal_projector(g)?;
    let value = |s: &DensityState| {
        let pass = t.trace_product(s.matrix()).re;
        let deviate = pi.trace_product(s.matrix()).re;
        pass.powf(k as f64) * deviate
    };
    let mut max_value = 0f64;
    for _ in 0..samples {
        let sigma = DensityState::random_mixture(g.n(), rng)?;
        max_value = max_value.max(value(&sigma));
    }
    let kf = k as f64;
    let at_argmax = state_with_fidelity(g, (kf - 1.0) / (kf + 1.0))?;
    let value_at_argmax = value(&at_argmax);
    max_value = max_value.max(value_at_argmax);
    let claimed_bound = (k >= min_k(n)?).then(|| half_budget(n));
    let holds = max_value <= max.value + ALGEBRA_TOL
        && max.value <= max.bound
        && claimed_bound.is_none_or(|c| max_value <= c + ALGEBRA_TOL);
    Ok(TradeoffCheck {
        n,
        k,
        samples,
        max_value,
        value_at_argmax,
        analytic_max: max.value,
        bound: max.bound,
        claimed_bound,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImplicationCheck {
    /// `joint_value / infidelity`, the largest acceptance factor consistent with the inputs.
    pub acceptance_factor_bound: Option<f64>,
    /// Whether `Tr(Pi rho_comp) >= 1/n`.
    pub premise_holds: bool,
    /// When the premise holds: whether the acceptance factor is forced to be at most `1/n`.
    pub conclusion_holds: bool,
}

/// Given `Tr[(T^{⊗k} ⊗ Pi) rho] <= 1/n^2` and the infidelity `Tr(Pi rho_comp)`,
/// bounds the acceptance factor `Tr(T^{⊗k} rho)` by division.
pub fn soundness_implication(joint_value: f64, infidelity: f64, n: u64) -> Result<ImplicationCheck> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    check_unit(joint_value, "[0, 1]")?;
    check_unit(infidelity, "[0, 1]")?;
    let nf = n as f64;
    let cap = 1.0 / (nf * nf);
    if joint_value > cap + ALGEBRA_TOL {
        return Err(Error::InconsistentInputs(format!(
            "joint value {joint_value} exceeds 1/n^2 = {cap}"
        )));
    }
    if joint_value > infidelity + ALGEBRA_TOL {
        return Err(Error::InconsistentInputs(format!(
            "joint value {joint_value} exceeds the infidelity {infidelity}"
        )));
    }
    let acceptance_factor_bound = (infidelity > 0.0).then(|| joint_value / infidelity);
    let premise_holds = infidelity >= 1.0 / nf - ALGEBRA_TOL;
    let conclusion_holds =
        !premise_holds || acceptance_factor_bound.is_some_and(|a| a <= 1.0 / nf + ALGEBRA_TOL);
    Ok(ImplicationCheck { acceptance_factor_bound, premise_holds, conclusion_holds })
}

/// Instrumented infidelity of a state, `Tr(Pi sigma)`.
pub fn infidelity(copy: &dyn QuantumCopy, g: &Graph) -> Result<f64> {
    Ok(1.0 - copy.fidelity_with_graph(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pass_probability_examples() {
        assert_eq!(pass_probability(1.0).unwrap(), 1.0);
        assert_eq!(pass_probability(0.0).unwrap(), 0.5);
        assert_eq!(pass_probability(0.25).unwrap(), 0.625);
        assert!(pass_probability(1.5).is_err());
    }

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation_value(1.0, 4).unwrap(), 0.0);
        assert_eq!(deviation_value(0.0, 7).unwrap(), 0.0);
        assert_eq!(deviation_value(0.75, 3).unwrap(), 0.2109375);
        assert!(deviation_value(0.5, 0).is_err());
        let one = deviation_maximum(1).unwrap();
        assert_eq!((one.argmax, one.value), (0.5, 0.5));
        let three = deviation_maximum(3).unwrap();
        assert!((three.value - 27.0 / 128.0).abs() < 1e-15);
        assert_eq!(three.bound, 0.5);
    }

    #[test]
    fn min_k_examples() {
        assert_eq!(min_k(1).unwrap(), 3);
        assert_eq!(min_k(2).unwrap(), 15);
        assert_eq!(min_k(3).unwrap(), 35);
        assert!(min_k(0).is_err());
    }

    #[test]
    fn definetti_examples() {
        assert!((definetti_term_real(1, 1, 2.0 * LN_2).unwrap() - 0.5).abs() < 1e-15);
        let a = definetti_term(5, 3, 100).unwrap();
        let b = definetti_term(5, 3, 200).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        assert!(definetti_term(15, 2, 9982).unwrap() <= 0.125);
        assert!(definetti_term(15, 2, 9981).unwrap() > 0.125);
        assert!(definetti_term(1, 1, 0).is_err());
    }

    #[test]
    fn min_m_examples() {
        assert_eq!(min_m(1, 3).unwrap(), 13);
        assert_eq!(min_m(2, 15).unwrap(), 9982);
        // k^n with n=1 is just k: ceil(2 ln2 * 3) = 5
        assert_eq!(min_m_text_form(1, 3), 5.0);
        // k^n with n=2 coincides with k^2
        assert_eq!(min_m_text_form(2, 15), 9982.0);
        assert!(min_m_text_form(3, 35) > min_m(3, 35).unwrap() as f64);
    }

    #[test]
    fn budget_examples() {
        assert!(!budget(2, 1, 1).unwrap().satisfied);
        for n in 1..=10 {
            let k = min_k(n).unwrap();
            let b = budget(n, k, min_m(n, k).unwrap()).unwrap();
            assert!(b.satisfied, "{b:?}");
            assert_eq!(b.total, b.max_deviation_term + b.definetti_term);
        }
    }

    #[test]
    fn product_identity_examples() {
        let g = Graph::empty(1).unwrap();
        let exact = PureState::graph_state(&g).unwrap().to_density();
        let r = verify_product_identity(&exact, &g, 2).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        let mixed = DensityState::maximally_mixed(1).unwrap();
        let r = verify_product_identity(&mixed, &g, 2).unwrap();
        assert!((r.lhs - 0.28125).abs() < 1e-12, "{r:?}");
        assert!((r.rhs - 0.28125).abs() < 1e-12);
        let big = Graph::path(4).unwrap();
        assert!(matches!(
            verify_product_identity(&DensityState::maximally_mixed(4).unwrap(), &big, 3),
            Err(Error::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn tradeoff_bound_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = Graph::empty(1).unwrap();
        let check = verify_tradeoff_bound(&g, 3, 1000, &mut rng).unwrap();
        assert!(check.holds);
        assert!(check.max_value <= 0.5);
        assert_eq!(check.claimed_bound, Some(0.5));
        assert!((check.value_at_argmax - check.analytic_max).abs() < 1e-9);

        let edge = Graph::new(2, [(0, 1)]).unwrap();
        let check = verify_tradeoff_bound(&edge, 1, 200, &mut rng).unwrap();
        assert!(check.holds);
        assert_eq!(check.claimed_bound, None);
        assert!((check.value_at_argmax - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fidelity_factory_covers_unit_interval() {
        let g = Graph::path(3).unwrap();
        for f in [0.0, 0.05, 0.125, 0.5, 1.0] {
            let s = state_with_fidelity(&g, f).unwrap();
            s.validate().unwrap();
            assert!((s.fidelity_with_graph(&g).unwrap() - f).abs() < 1e-10);
        }
    }

    #[test]
    fn implication_examples() {
        let r = soundness_implication(1.0 / 16.0, 0.25, 4).unwrap();
        assert_eq!(r.acceptance_factor_bound, Some(0.25));
        assert!(r.premise_holds && r.conclusion_holds);

        let r = soundness_implication(1.0 / 9.0, 1.0 / 3.0, 3).unwrap();
        assert!(r.premise_holds && r.conclusion_holds);

        let r = soundness_implication(0.0, 0.0, 4).unwrap();
        assert_eq!(r.acceptance_factor_bound, None);
        assert!(!r.premise_holds && r.conclusion_holds);

        assert!(matches!(soundness_implication(0.2, 0.5, 4), Err(Error::InconsistentInputs(_))));
    }
}
