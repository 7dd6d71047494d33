//! Dense statevector and density-matrix simulation.
//!
//! Qubit 0 is the most significant bit of a basis-state index. Registers are
//! capped at [`DENSE_QUBIT_CAP`] qubits.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use crate::pauli::PauliString;

pub const DENSE_QUBIT_CAP: usize = 12;

/// Tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Tolerance for positivity of density matrices.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Born probabilities this close to 0 or 1 are treated as deterministic and
/// consume no randomness.
pub const FORCED_EPS: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    /// Measurement bit: 0 for +1, 1 for -1.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn times(self, other: Outcome) -> Outcome {
        if self == other {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        match o {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(format!("outcome must be +1 or -1, got {v}")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Measurement {
    pub outcome: Outcome,
    /// Born probability of the observed outcome.
    pub probability: f64,
    /// True when the outcome was certain and no randomness was drawn.
    pub forced: bool,
}

/// Draws an outcome with `P(+1) = p_plus`, skipping the RNG when the outcome is certain.
pub fn sample_outcome(p_plus: f64, rng: &mut dyn RngCore) -> Measurement {
    let p_plus = p_plus.clamp(0.0, 1.0);
    if p_plus >= 1.0 - FORCED_EPS {
        return Measurement { outcome: Outcome::Plus, probability: 1.0, forced: true };
    }
    if p_plus <= FORCED_EPS {
        return Measurement { outcome: Outcome::Minus, probability: 1.0, forced: true };
    }
    if rng.random::<f64>() < p_plus {
        Measurement { outcome: Outcome::Plus, probability: p_plus, forced: false }
    } else {
        Measurement { outcome: Outcome::Minus, probability: 1.0 - p_plus, forced: false }
    }
}

/// Anything that can play the role of one party-held copy.
pub trait QuantumCopy {
    fn num_qubits(&self) -> usize;

    /// `Tr(P rho)` for a Hermitian string `P`.
    fn pauli_expectation(&self, p: &PauliString) -> Result<f64>;

    /// Projects onto the `outcome` eigenspace of `P`, renormalises, and
    /// returns the Born probability. A zero-probability projection leaves
    /// the state untouched.
    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64>;

    /// Expectation of `cos(theta) X + sin(theta) Y` on one qubit.
    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64>;

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64>;

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64>;

    fn measure_pauli(&mut self, p: &PauliString, rng: &mut dyn RngCore) -> Result<Measurement> {
        let e = self.pauli_expectation(p)?;
        let m = sample_outcome((1.0 + e) / 2.0, rng);
        self.project_pauli(p, m.outcome)?;
        Ok(m)
    }

    fn measure_equatorial(
        &mut self,
        qubit: usize,
        theta: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Measurement> {
        let e = self.equatorial_expectation(qubit, theta)?;
        let m = sample_outcome((1.0 + e) / 2.0, rng);
        self.project_equatorial(qubit, theta, m.outcome)?;
        Ok(m)
    }
}

/// A matrix with one nonzero entry per column: `A|b> = coef[b] |b xor flip>`.
struct Monomial {
    flip: usize,
    coef: Vec<C64>,
}

impl Monomial {
    fn pauli(p: &PauliString, n: usize) -> Result<Monomial> {
        if p.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: p.len() });
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        let (x, z) = p.masks();
        let y = p.y_count();
        let coef = (0..1usize << n).map(|b| p.action_coefficient(b, z, y)).collect();
        Ok(Monomial { flip: x, coef })
    }

    /// `cos(theta) X + sin(theta) Y` on `qubit`.
    fn equatorial(n: usize, qubit: usize, theta: f64) -> Result<Monomial> {
        if qubit >= n {
            return Err(Error::VertexOutOfRange { vertex: qubit, n });
        }
        let bit = 1usize << (n - 1 - qubit);
        let up = C64::from_polar(1.0, theta);
        let down = up.conj();
        let coef = (0..1usize << n).map(|b| if b & bit == 0 { up } else { down }).collect();
        Ok(Monomial { flip: bit, coef })
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        for (b, &amp) in v.iter().enumerate() {
            out[b ^ self.flip] = self.coef[b] * amp;
        }
        out
    }

    fn expectation_pure(&self, v: &[C64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(b, &amp)| v[b ^ self.flip].conj() * self.coef[b] * amp)
            .sum::<C64>()
            .re
    }

    fn expectation_mixed(&self, rho: &CMatrix) -> f64 {
        (0..rho.dim())
            .map(|a| self.coef[a ^ self.flip] * rho[(a ^ self.flip, a)])
            .sum::<C64>()
            .re
    }

    fn left(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.dim();
        let mut out = CMatrix::zeros(d);
        for a in 0..d {
            let c = a ^ self.flip;
            let k = self.coef[c];
            for j in 0..d {
                out[(a, j)] = k * rho[(c, j)];
            }
        }
        out
    }

    fn right(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.dim();
        let mut out = CMatrix::zeros(d);
        for b in 0..d {
            let k = self.coef[b];
            let c = b ^ self.flip;
            for i in 0..d {
                out[(i, b)] = rho[(i, c)] * k;
            }
        }
        out
    }
}

fn check_cap(qubits: usize) -> Result<()> {
    if qubits > DENSE_QUBIT_CAP {
        Err(Error::DenseCapExceeded { qubits, cap: DENSE_QUBIT_CAP })
    } else {
        Ok(())
    }
}

/// Graph-state amplitudes: `(-1)^(edges inside b) / sqrt(2^n)`.
fn graph_amplitudes(g: &Graph) -> Vec<C64> {
    let n = g.n();
    let norm = (1usize << n) as f64;
    let edges: Vec<(usize, usize)> = g
        .edges()
        .map(|(u, v)| (1usize << (n - 1 - u), 1usize << (n - 1 - v)))
        .collect();
    (0..1usize << n)
        .map(|b| {
            let inside = edges.iter().filter(|(u, v)| b & u != 0 && b & v != 0).count();
            let sign = if inside % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(sign / norm.sqrt(), 0.0)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidState(format!("{len} amplitudes is not 2^n for n >= 1")));
        }
        let n = len.trailing_zeros() as usize;
        check_cap(n)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(PureState { n, amplitudes })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_cap(n)?;
        if n == 0 || index >= 1 << n {
            return Err(Error::InvalidState(format!("basis index {index} invalid for {n} qubits")));
        }
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[index] = ONE;
        Ok(PureState { n, amplitudes })
    }

    /// `|G> = prod CZ_ij |+>^n`.
    pub fn graph_state(g: &Graph) -> Result<Self> {
        check_cap(g.n())?;
        Ok(PureState { n: g.n(), amplitudes: graph_amplitudes(g) })
    }

    pub fn haar_random(n: usize, rng: &mut dyn RngCore) -> Result<Self> {
        check_cap(n)?;
        if n == 0 {
            return Err(Error::InvalidState("need at least one qubit".into()));
        }
        let mut amplitudes: Vec<C64> = (0..1usize << n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut *rng);
                let im: f64 = StandardNormal.sample(&mut *rng);
                C64::new(re, im)
            })
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(PureState { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: other.n });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Applies a Pauli string (any phase) as a unitary.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: p.len() });
        }
        let (x, z) = p.masks();
        let y = p.y_count();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (b, &amp) in self.amplitudes.iter().enumerate() {
            out[b ^ x] = p.action_coefficient(b, z, y) * amp;
        }
        self.amplitudes = out;
        Ok(())
    }

    pub fn to_density(&self) -> DensityState {
        DensityState { n: self.n, matrix: CMatrix::outer(&self.amplitudes) }
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        check_cap(self.n + other.n)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(PureState { n: self.n + other.n, amplitudes })
    }

    fn project(&mut self, op: &Monomial, outcome: Outcome) -> f64 {
        let s = outcome.sign();
        let moved = op.apply(&self.amplitudes);
        let projected: Vec<C64> =
            self.amplitudes.iter().zip(&moved).map(|(a, b)| (a + b * s) * 0.5).collect();
        let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        if prob > FORCED_EPS {
            let norm = prob.sqrt();
            self.amplitudes = projected.into_iter().map(|a| a / norm).collect();
        }
        prob.clamp(0.0, 1.0)
    }
}

impl QuantumCopy for PureState {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        Ok(Monomial::pauli(p, self.n)?.expectation_pure(&self.amplitudes))
    }

    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64> {
        let op = Monomial::pauli(p, self.n)?;
        Ok(self.project(&op, outcome))
    }

    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64> {
        Ok(Monomial::equatorial(self.n, qubit, theta)?.expectation_pure(&self.amplitudes))
    }

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64> {
        let op = Monomial::equatorial(self.n, qubit, theta)?;
        Ok(self.project(&op, outcome))
    }

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64> {
        if g.n() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: g.n() });
        }
        let amp: C64 = graph_amplitudes(g)
            .iter()
            .zip(&self.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(amp.norm_sqr())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    n: usize,
    matrix: CMatrix,
}

impl DensityState {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.dim();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!("dimension {dim} is not 2^n for n >= 1")));
        }
        let n = dim.trailing_zeros() as usize;
        check_cap(n)?;
        let state = DensityState { n, matrix };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_error();
        if herm > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if !self.matrix.is_positive_with_shift(POSITIVITY_TOL) {
            return Err(Error::InvalidState("eigenvalue below -1e-9".into()));
        }
        Ok(())
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_cap(n)?;
        if n == 0 {
            return Err(Error::InvalidState("need at least one qubit".into()));
        }
        let dim = 1usize << n;
        Ok(DensityState { n, matrix: CMatrix::identity(dim).scale(1.0 / dim as f64) })
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mix(lambda: f64, a: &DensityState, b: &DensityState) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange { value: lambda, range: "[0, 1]" });
        }
        if a.n != b.n {
            return Err(Error::LengthMismatch { expected: a.n, actual: b.n });
        }
        Ok(DensityState { n: a.n, matrix: a.matrix.scale(lambda).add(&b.matrix.scale(1.0 - lambda)) })
    }

    /// `lambda |G><G| + (1 - lambda) I / 2^n` with fidelity exactly `target_fidelity`.
    pub fn depolarized_graph_state(g: &Graph, target_fidelity: f64) -> Result<Self> {
        let floor = 1.0 / (1usize << g.n().min(63)) as f64;
        if !(floor - ALGEBRA_TOL..=1.0 + ALGEBRA_TOL).contains(&target_fidelity) {
            return Err(Error::OutOfRange { value: target_fidelity, range: "[2^-n, 1]" });
        }
        let lambda = ((target_fidelity - floor) / (1.0 - floor)).clamp(0.0, 1.0);
        let graph = PureState::graph_state(g)?.to_density();
        if lambda == 1.0 {
            return Ok(graph);
        }
        DensityState::mix(lambda, &graph, &DensityState::maximally_mixed(g.n())?)
    }

    /// Mixture `lambda |psi><psi| + (1 - lambda) I / 2^n` with Haar-random `psi` and uniform `lambda`.
    pub fn random_mixture(n: usize, rng: &mut dyn RngCore) -> Result<Self> {
        let psi = PureState::haar_random(n, rng)?.to_density();
        let lambda: f64 = rng.random();
        DensityState::mix(lambda, &psi, &DensityState::maximally_mixed(n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn tensor(&self, other: &DensityState) -> Result<DensityState> {
        check_cap(self.n + other.n)?;
        Ok(DensityState { n: self.n + other.n, matrix: self.matrix.kron(&other.matrix) })
    }

    /// `sigma^{⊗ copies}`.
    pub fn tensor_power(&self, copies: usize) -> Result<DensityState> {
        if copies == 0 {
            return Err(Error::InvalidState("tensor power needs at least one copy".into()));
        }
        check_cap(self.n * copies)?;
        let mut out = self.clone();
        for _ in 1..copies {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// Reduced state on `keep` (sorted ascending), tracing out every other qubit.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityState> {
        let n = self.n;
        if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep[keep.len() - 1] >= n {
            return Err(Error::InvalidState(format!("bad qubit selection {keep:?} for {n} qubits")));
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let scatter = |qubits: &[usize], value: usize| -> usize {
            let k = qubits.len();
            qubits.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                if value >> (k - 1 - pos) & 1 == 1 {
                    acc | 1 << (n - 1 - q)
                } else {
                    acc
                }
            })
        };
        let kept_idx: Vec<usize> = (0..1usize << keep.len()).map(|v| scatter(keep, v)).collect();
        let traced_idx: Vec<usize> =
            (0..1usize << traced.len()).map(|v| scatter(&traced, v)).collect();
        let dk = kept_idx.len();
        let mut out = CMatrix::zeros(dk);
        for i in 0..dk {
            for j in 0..dk {
                out[(i, j)] = traced_idx
                    .iter()
                    .map(|&t| self.matrix[(kept_idx[i] | t, kept_idx[j] | t)])
                    .sum();
            }
        }
        Ok(DensityState { n: keep.len(), matrix: out })
    }

    /// `<G| sigma |G>`.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.n() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: psi.n() });
        }
        let v = psi.amplitudes();
        let d = v.len();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += v[i].conj() * self.matrix[(i, j)] * v[j];
            }
        }
        Ok(acc.re)
    }

    fn project(&mut self, op: &Monomial, outcome: Outcome) -> f64 {
        let s = outcome.sign();
        let left = op.left(&self.matrix);
        let right = op.right(&self.matrix);
        let both = op.right(&left);
        let mut projected = self.matrix.add(&left.scale(s)).add(&right.scale(s)).add(&both);
        projected = projected.scale(0.25);
        let prob = projected.trace().re;
        if prob > FORCED_EPS {
            self.matrix = projected.scale(1.0 / prob);
        }
        prob.clamp(0.0, 1.0)
    }
}

impl From<PureState> for DensityState {
    fn from(p: PureState) -> Self {
        p.to_density()
    }
}

impl QuantumCopy for DensityState {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        Ok(Monomial::pauli(p, self.n)?.expectation_mixed(&self.matrix))
    }

    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64> {
        let op = Monomial::pauli(p, self.n)?;
        Ok(self.project(&op, outcome))
    }

    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64> {
        Ok(Monomial::equatorial(self.n, qubit, theta)?.expectation_mixed(&self.matrix))
    }

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64> {
        let op = Monomial::equatorial(self.n, qubit, theta)?;
        Ok(self.project(&op, outcome))
    }

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64> {
        if g.n() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: g.n() });
        }
        self.fidelity_with_pure(&PureState::graph_state(g)?)
    }
}

/// Maps an angle that is a multiple of pi/2 to the quarter turn it represents.
pub fn quarter_turns(theta: f64) -> Option<u8> {
    let turns = theta / FRAC_PI_2;
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-12 {
        return None;
    }
    Some((rounded as i64).rem_euclid(4) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn graph_state_amplitudes() {
        let plus = PureState::graph_state(&Graph::empty(1).unwrap()).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!(plus.amplitudes().iter().all(|a| close(a.re, h) && close(a.im, 0.0)));

        let edge = PureState::graph_state(&Graph::new(2, [(0, 1)]).unwrap()).unwrap();
        let re: Vec<f64> = edge.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(re, vec![0.5, 0.5, 0.5, -0.5]);

        let tri = PureState::graph_state(&Graph::complete(3).unwrap()).unwrap();
        assert!(close(tri.amplitudes()[0b111].re, -1.0 / 8f64.sqrt()));
    }

    #[test]
    fn graph_state_matches_cz_circuit() {
        // oracle: apply CZ by hand to |+>^n
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let mut amps = vec![C64::new(1.0 / 8f64.sqrt(), 0.0); 8];
        for (u, v) in g.edges() {
            for (b, a) in amps.iter_mut().enumerate() {
                if b >> (2 - u) & 1 == 1 && b >> (2 - v) & 1 == 1 {
                    *a = -*a;
                }
            }
        }
        let gs = PureState::graph_state(&g).unwrap();
        for (a, b) in gs.amplitudes().iter().zip(&amps) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn stabilized_measurements_are_forced() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut psi = PureState::graph_state(&g).unwrap();
        let m = psi.measure_pauli(&p("+YY"), &mut rng).unwrap();
        assert_eq!(m.outcome, Outcome::Plus);
        assert!(m.forced);
        let before = psi.clone();
        let m = psi.measure_pauli(&p("+II"), &mut rng).unwrap();
        assert!(m.forced && m.outcome == Outcome::Plus);
        assert!((psi.inner(&before).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_state_x_measurement_is_fair() {
        let zero = PureState::basis(1, 0).unwrap();
        assert!(close(zero.pauli_expectation(&p("+X")).unwrap(), 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let plus = (0..4000)
            .filter(|_| {
                let mut s = zero.clone();
                s.measure_pauli(&p("+X"), &mut rng).unwrap().outcome == Outcome::Plus
            })
            .count();
        // 3 sigma = 95
        assert!((plus as i64 - 2000).abs() < 95, "{plus}");
    }

    #[test]
    fn rejects_imaginary_observables() {
        let mut s = PureState::basis(1, 0).unwrap();
        assert!(matches!(s.project_pauli(&p("+iX"), Outcome::Plus), Err(Error::NonHermitian(_))));
        let d = s.to_density();
        assert!(matches!(d.pauli_expectation(&p("-iZ")), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn fidelity_examples() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let gs = PureState::graph_state(&g).unwrap();
        assert!(close(gs.to_density().fidelity_with_graph(&g).unwrap(), 1.0));
        let mixed = DensityState::maximally_mixed(2).unwrap();
        assert!(close(mixed.fidelity_with_graph(&g).unwrap(), 0.25));
        let plusplus = PureState::graph_state(&Graph::empty(2).unwrap()).unwrap();
        assert!(close(plusplus.to_density().fidelity_with_graph(&g).unwrap(), 0.25));
        assert!(mixed.fidelity_with_graph(&Graph::empty(3).unwrap()).is_err());
    }

    #[test]
    fn tensor_power_examples() {
        let zero = PureState::basis(1, 0).unwrap().to_density();
        assert_eq!(zero.tensor_power(1).unwrap(), zero);
        let three = zero.tensor_power(3).unwrap();
        assert_eq!(three, PureState::basis(3, 0).unwrap().to_density());
        assert!(close(three.trace(), 1.0));
        assert!(matches!(
            DensityState::maximally_mixed(3).unwrap().tensor_power(5),
            Err(Error::DenseCapExceeded { qubits: 15, .. })
        ));
    }

    #[test]
    fn depolarized_factory() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let exact = DensityState::depolarized_graph_state(&g, 1.0).unwrap();
        assert_eq!(exact, PureState::graph_state(&g).unwrap().to_density());
        let floor = DensityState::depolarized_graph_state(&g, 0.25).unwrap();
        assert!(floor.matrix().max_abs_diff(DensityState::maximally_mixed(2).unwrap().matrix()) < 1e-15);
        // lambda = 0.5 => half graph, half mixed
        let half = DensityState::depolarized_graph_state(&g, 0.625).unwrap();
        let expected = DensityState::mix(
            0.5,
            &PureState::graph_state(&g).unwrap().to_density(),
            &DensityState::maximally_mixed(2).unwrap(),
        )
        .unwrap();
        assert!(half.matrix().max_abs_diff(expected.matrix()) < 1e-15);
        for f in [0.25, 0.3, 0.5, 0.75, 0.9, 1.0] {
            let s = DensityState::depolarized_graph_state(&g, f).unwrap();
            assert!((s.fidelity_with_graph(&g).unwrap() - f).abs() < 1e-10);
            s.validate().unwrap();
        }
        assert!(DensityState::depolarized_graph_state(&g, 0.2).is_err());
        assert!(DensityState::depolarized_graph_state(&g, 1.1).is_err());
    }

    #[test]
    fn invalid_density_rejected() {
        let mut m = CMatrix::identity(2).scale(0.5);
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(DensityState::from_matrix(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.3, 0.0);
        assert!(DensityState::from_matrix(m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.6, 0.0);
        m[(1, 0)] = C64::new(0.6, 0.0);
        assert!(DensityState::from_matrix(m).is_err());
        assert!(DensityState::from_matrix(CMatrix::identity(2)).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DensityState::random_mixture(1, &mut rng).unwrap();
        let b = DensityState::random_mixture(2, &mut rng).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert!(ab.partial_trace(&[0]).unwrap().matrix().max_abs_diff(a.matrix()) < 1e-12);
        assert!(ab.partial_trace(&[1, 2]).unwrap().matrix().max_abs_diff(b.matrix()) < 1e-12);
        assert!(ab.partial_trace(&[2, 1]).is_err());
    }

    #[test]
    fn equatorial_measurements_on_plus() {
        let plus = PureState::graph_state(&Graph::empty(1).unwrap()).unwrap();
        assert!(close(plus.equatorial_expectation(0, 0.0).unwrap(), 1.0));
        assert!(close(plus.equatorial_expectation(0, PI).unwrap(), -1.0));
        assert!(close(plus.equatorial_expectation(0, PI / 2.0).unwrap(), 0.0));
        let d = plus.to_density();
        assert!(close(d.equatorial_expectation(0, PI / 3.0).unwrap(), 0.5));
    }

    #[test]
    fn quarter_turn_detection() {
        assert_eq!(quarter_turns(0.0), Some(0));
        assert_eq!(quarter_turns(PI / 2.0), Some(1));
        assert_eq!(quarter_turns(-PI / 2.0), Some(3));
        assert_eq!(quarter_turns(3.0 * PI), Some(2));
        assert_eq!(quarter_turns(0.3), None);
    }
}
