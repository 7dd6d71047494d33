//! Three-party arbitrable delegation protocol.
//!
//! Bob prepares copies of |G>, the arbitrator Charlie permutes them, discards
//! `m`, keeps `k` and forwards `k + 1` to Alice. Alice tests `k` of those and
//! computes on the last one. On a rejection Charlie tests the stored copies
//! to decide who is cheating. In private mode Bob sends `k + m + 1` copies
//! straight to Alice and there is no arbitration.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::honesty::{HonestyTest, MeasurementMode, StabilizerSamplingTest, TestRecord};
use crate::linalg::{C64, ZERO};
use crate::pauli::{Pauli, PauliString};
use crate::state::{quarter_turns, DensityState, Outcome, PureState, QuantumCopy, DENSE_QUBIT_CAP};
use crate::tableau::StabilizerTableau;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Arbitrable,
    ArbitrableCharlieEarlyTest,
    PrivateOnly,
}

impl Mode {
    pub fn is_arbitrable(self) -> bool {
        !matches!(self, Mode::PrivateOnly)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub mode: Mode,
    /// Set when `k` or `m` is below the soundness constraints.
    pub toy: bool,
    pub graph: Graph,
}

impl ProtocolParams {
    /// Parameters with the `toy` flag inferred from the constraints.
    pub fn new(graph: Graph, k: usize, m: usize, mode: Mode) -> Result<Self> {
        ProtocolParams::with_toy(graph, k, m, mode, None)
    }

    pub fn with_toy(graph: Graph, k: usize, m: usize, mode: Mode, toy: Option<bool>) -> Result<Self> {
        let mut params = ProtocolParams { n: graph.n(), k, m, mode, toy: false, graph };
        let below = params.below_constraints()?;
        params.toy = toy.unwrap_or(below);
        params.validate()?;
        Ok(params)
    }

    fn below_constraints(&self) -> Result<bool> {
        let n = self.n as u64;
        let min_k = bounds::min_k(n)?;
        if (self.k as u64) < min_k {
            return Ok(true);
        }
        Ok(match bounds::min_m(n, self.k as u64) {
            Ok(min_m) => (self.m as u64) < min_m,
            Err(_) => true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != self.graph.n() {
            return Err(Error::InvalidParams(format!(
                "n = {} but the graph has {} vertices",
                self.n,
                self.graph.n()
            )));
        }
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParams("n and k must be at least 1".into()));
        }
        if !self.toy && self.below_constraints()? {
            return Err(Error::InvalidParams(format!(
                "k = {}, m = {} violate k >= 4n^2-1 and m >= 2 ln2 k^2 n^5 for n = {}; set toy = true",
                self.k, self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn total_copies(&self) -> usize {
        match self.mode {
            Mode::PrivateOnly => self.k + self.m + 1,
            _ => 2 * self.k + self.m + 1,
        }
    }
}

/// Single-copy state a strategy can ask Bob to prepare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Graph,
    /// `Z_q |G>` for each listed `q`.
    ZFlip { qubits: Vec<usize> },
    /// `Z_0 |G>`, orthogonal to `|G>`.
    Orthogonal,
    Depolarized { fidelity: f64 },
    /// Any fidelity in `[0, 1]`, mixing with `Z_0 |G>` below the depolarising floor.
    Fidelity { fidelity: f64 },
    MaximallyMixed,
}

impl StateSpec {
    pub fn is_stabilizer(&self) -> bool {
        matches!(self, StateSpec::Graph | StateSpec::ZFlip { .. } | StateSpec::Orthogonal)
    }

    fn flips(&self) -> Vec<usize> {
        match self {
            StateSpec::ZFlip { qubits } => qubits.clone(),
            StateSpec::Orthogonal => vec![0],
            _ => Vec::new(),
        }
    }

    /// Exact fidelity with `|G>`.
    pub fn fidelity(&self, g: &Graph) -> Result<f64> {
        Ok(match self {
            StateSpec::Graph => 1.0,
            StateSpec::ZFlip { qubits } => {
                let mut odd = vec![false; g.n()];
                for &q in qubits {
                    *odd.get_mut(q).ok_or(Error::VertexOutOfRange { vertex: q, n: g.n() })? ^= true;
                }
                if odd.iter().any(|&b| b) {
                    0.0
                } else {
                    1.0
                }
            }
            StateSpec::Orthogonal => 0.0,
            StateSpec::Depolarized { fidelity } | StateSpec::Fidelity { fidelity } => *fidelity,
            StateSpec::MaximallyMixed => 1.0 / (1usize << g.n()) as f64,
        })
    }

    fn pure(&self, g: &Graph) -> Result<PureState> {
        let mut psi = PureState::graph_state(g)?;
        for q in self.flips() {
            if q >= g.n() {
                return Err(Error::VertexOutOfRange { vertex: q, n: g.n() });
            }
            psi.apply_pauli(&PauliString::single(g.n(), q, Pauli::Z))?;
        }
        Ok(psi)
    }

    pub fn density(&self, g: &Graph) -> Result<DensityState> {
        match self {
            StateSpec::Depolarized { fidelity } => DensityState::depolarized_graph_state(g, *fidelity),
            StateSpec::Fidelity { fidelity } => bounds::state_with_fidelity(g, *fidelity),
            StateSpec::MaximallyMixed => DensityState::maximally_mixed(g.n()),
            _ => Ok(self.pure(g)?.to_density()),
        }
    }

    fn build(&self, g: &Graph, backend: ResolvedBackend) -> Result<CopyState> {
        match backend {
            ResolvedBackend::Tableau => {
                if !self.is_stabilizer() {
                    return Err(Error::InvalidStrategy(format!("{self:?} is not a stabilizer state")));
                }
                Ok(CopyState::Stabilizer(StabilizerTableau::from_graph_with_z_flips(g, &self.flips())?))
            }
            _ if self.is_stabilizer() => Ok(CopyState::Pure(self.pure(g)?)),
            _ => Ok(CopyState::Mixed(self.density(g)?)),
        }
    }

    fn validate(&self, g: &Graph) -> Result<()> {
        match self {
            StateSpec::Depolarized { fidelity } => {
                DensityState::depolarized_graph_state(g, *fidelity).map(|_| ())
            }
            StateSpec::Fidelity { fidelity } => bounds::state_with_fidelity(g, *fidelity).map(|_| ()),
            _ => self.fidelity(g).map(|_| ()),
        }
        .map_err(|e| Error::InvalidStrategy(e.to_string()))
    }
}

/// Joint state over every copy, for correlated adversaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JointSpec {
    /// `(|0...0> + |1...1>) / sqrt(2)` over all qubits.
    Ghz,
    /// `(1 - p) |G><G|^{⊗N} + p (Z_0|G><G|Z_0)^{⊗N}`.
    CorrelatedFlip { bad_probability: f64 },
    /// `sigma^{⊗N}`.
    Product { state: StateSpec },
}

impl JointSpec {
    pub fn build(&self, g: &Graph, copies: usize) -> Result<DensityState> {
        let qubits = g.n() * copies;
        if qubits > DENSE_QUBIT_CAP {
            return Err(Error::DenseCapExceeded { qubits, cap: DENSE_QUBIT_CAP });
        }
        match self {
            JointSpec::Ghz => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let mut amps = vec![ZERO; 1 << qubits];
                amps[0] = C64::new(h, 0.0);
                amps[(1 << qubits) - 1] = C64::new(h, 0.0);
                Ok(PureState::from_amplitudes(amps)?.to_density())
            }
            JointSpec::CorrelatedFlip { bad_probability } => {
                let power = |spec: &StateSpec| -> Result<DensityState> {
                    let one = spec.pure(g)?;
                    let mut acc = one.clone();
                    for _ in 1..copies {
                        acc = acc.tensor(&one)?;
                    }
                    Ok(acc.to_density())
                };
                let good = power(&StateSpec::Graph)?;
                let bad = power(&StateSpec::Orthogonal)?;
                DensityState::mix(1.0 - bad_probability, &good, &bad)
                    .map_err(|e| Error::InvalidStrategy(e.to_string()))
            }
            JointSpec::Product { state } => state.density(g)?.tensor_power(copies),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BobStrategy {
    Honest,
    IidState { state: StateSpec },
    PlantBad { count: usize, state: StateSpec },
    Entangled { joint: JointSpec },
}

impl BobStrategy {
    /// Whether every prepared copy is a stabilizer state.
    pub fn is_stabilizer_compatible(&self) -> bool {
        match self {
            BobStrategy::Honest => true,
            BobStrategy::IidState { state } | BobStrategy::PlantBad { state, .. } => state.is_stabilizer(),
            BobStrategy::Entangled { .. } => false,
        }
    }

    /// Fidelity of each copy when the copies are iid.
    pub fn iid_fidelity(&self, g: &Graph) -> Option<f64> {
        match self {
            BobStrategy::Honest => Some(1.0),
            BobStrategy::IidState { state } => state.fidelity(g).ok(),
            BobStrategy::PlantBad { .. } | BobStrategy::Entangled { .. } => None,
        }
    }

    pub fn validate(&self, params: &ProtocolParams) -> Result<()> {
        match self {
            BobStrategy::Honest => Ok(()),
            BobStrategy::IidState { state } => state.validate(&params.graph),
            BobStrategy::PlantBad { count, state } => {
                if *count > params.total_copies() {
                    return Err(Error::InvalidStrategy(format!(
                        "{count} bad copies but only {} copies in total",
                        params.total_copies()
                    )));
                }
                state.validate(&params.graph)
            }
            BobStrategy::Entangled { joint } => {
                let qubits = params.n * params.total_copies();
                if qubits > DENSE_QUBIT_CAP {
                    return Err(Error::DenseCapExceeded { qubits, cap: DENSE_QUBIT_CAP });
                }
                match joint {
                    JointSpec::CorrelatedFlip { bad_probability } if !(0.0..=1.0).contains(bad_probability) => {
                        Err(Error::InvalidStrategy(format!("bad_probability {bad_probability} not in [0, 1]")))
                    }
                    JointSpec::Product { state } => state.validate(&params.graph),
                    _ => Ok(()),
                }
            }
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AliceStrategy {
    #[default]
    Honest,
    /// Rejects regardless of the test results.
    FalseReject,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Dense,
    Tableau,
    #[default]
    Auto,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolvedBackend {
    Dense,
    Tableau,
    DenseJoint,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub test_mode: MeasurementMode,
    /// Per-qubit measurement angles on the computation copy; zeros when absent.
    #[serde(default)]
    pub pattern: Option<Vec<f64>>,
}

impl RunOptions {
    pub fn pattern_for(&self, n: usize) -> Result<Vec<f64>> {
        match &self.pattern {
            None => Ok(vec![0.0; n]),
            Some(p) if p.len() == n => Ok(p.clone()),
            Some(p) => Err(Error::LengthMismatch { expected: n, actual: p.len() }),
        }
    }
}

pub fn resolve_backend(
    params: &ProtocolParams,
    bob: &BobStrategy,
    options: &RunOptions,
) -> Result<ResolvedBackend> {
    let pattern = options.pattern_for(params.n)?;
    let clifford = pattern.iter().all(|&t| quarter_turns(t).is_some());
    if let BobStrategy::Entangled { .. } = bob {
        if options.backend == Backend::Tableau {
            return Err(Error::InvalidStrategy("entangled strategies need the dense backend".into()));
        }
        return Ok(ResolvedBackend::DenseJoint);
    }
    let stabilizer = bob.is_stabilizer_compatible() && clifford;
    match options.backend {
        Backend::Tableau if !stabilizer => Err(Error::InvalidStrategy(
            "tableau backend needs stabilizer states and multiple-of-pi/2 angles".into(),
        )),
        Backend::Tableau => Ok(ResolvedBackend::Tableau),
        Backend::Auto if stabilizer => Ok(ResolvedBackend::Tableau),
        _ if params.n > DENSE_QUBIT_CAP => {
            Err(Error::DenseCapExceeded { qubits: params.n, cap: DENSE_QUBIT_CAP })
        }
        _ => Ok(ResolvedBackend::Dense),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CopyState {
    Pure(PureState),
    Mixed(DensityState),
    Stabilizer(StabilizerTableau),
}

impl CopyState {
    fn inner(&self) -> &dyn QuantumCopy {
        match self {
            CopyState::Pure(s) => s,
            CopyState::Mixed(s) => s,
            CopyState::Stabilizer(s) => s,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn QuantumCopy {
        match self {
            CopyState::Pure(s) => s,
            CopyState::Mixed(s) => s,
            CopyState::Stabilizer(s) => s,
        }
    }
}

impl QuantumCopy for CopyState {
    fn num_qubits(&self) -> usize {
        self.inner().num_qubits()
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        self.inner().pauli_expectation(p)
    }

    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64> {
        self.inner_mut().project_pauli(p, outcome)
    }

    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64> {
        self.inner().equatorial_expectation(qubit, theta)
    }

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64> {
        self.inner_mut().project_equatorial(qubit, theta, outcome)
    }

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64> {
        self.inner().fidelity_with_graph(g)
    }
}

/// One copy's qubit block inside a joint register.
pub struct JointBlock<'a> {
    state: &'a mut DensityState,
    offset: usize,
    n: usize,
}

impl JointBlock<'_> {
    fn embed(&self, p: &PauliString) -> Result<PauliString> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: p.len() });
        }
        p.embed(self.state.n(), self.offset)
    }

    fn qubit(&self, q: usize) -> Result<usize> {
        if q >= self.n {
            return Err(Error::VertexOutOfRange { vertex: q, n: self.n });
        }
        Ok(self.offset + q)
    }
}

impl QuantumCopy for JointBlock<'_> {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        self.state.pauli_expectation(&self.embed(p)?)
    }

    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64> {
        let e = self.embed(p)?;
        self.state.project_pauli(&e, outcome)
    }

    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64> {
        self.state.equatorial_expectation(self.qubit(qubit)?, theta)
    }

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64> {
        let q = self.qubit(qubit)?;
        self.state.project_equatorial(q, theta, outcome)
    }

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64> {
        let keep: Vec<usize> = (self.offset..self.offset + self.n).collect();
        let reduced = if keep.len() == self.state.n() {
            self.state.clone()
        } else {
            self.state.partial_trace(&keep)?
        };
        reduced.fidelity_with_graph(g)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Bob,
    Charlie,
    Alice,
}

impl Party {
    fn tag(self) -> &'static [u8] {
        match self {
            Party::Bob => b"bob",
            Party::Charlie => b"charlie",
            Party::Alice => b"alice",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "party", rename_all = "snake_case")]
pub enum CopyStatus {
    Held(Party),
    Tested,
    Discarded,
    Compute,
}

#[derive(Clone, Debug)]
enum Storage {
    Independent(Vec<CopyState>),
    /// `blocks[i]` is the copy id stored in qubit block `i`.
    Joint { state: DensityState, blocks: Vec<usize> },
}

/// Tracks where every copy is; sending a copy is a status change.
#[derive(Clone, Debug)]
pub struct CopyRegistry {
    n: usize,
    status: Vec<CopyStatus>,
    computed: Vec<bool>,
    storage: Storage,
}

impl CopyRegistry {
    pub fn independent(n: usize, copies: Vec<CopyState>) -> Result<Self> {
        if let Some(bad) = copies.iter().position(|c| c.num_qubits() != n) {
            return Err(Error::CopyState { copy: bad, reason: "wrong qubit count".into() });
        }
        let len = copies.len();
        Ok(CopyRegistry {
            n,
            status: vec![CopyStatus::Held(Party::Bob); len],
            computed: vec![false; len],
            storage: Storage::Independent(copies),
        })
    }

    pub fn joint(n: usize, copies: usize, state: DensityState) -> Result<Self> {
        if state.n() != n * copies {
            return Err(Error::LengthMismatch { expected: n * copies, actual: state.n() });
        }
        Ok(CopyRegistry {
            n,
            status: vec![CopyStatus::Held(Party::Bob); copies],
            computed: vec![false; copies],
            storage: Storage::Joint { state, blocks: (0..copies).collect() },
        })
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    pub fn status(&self, copy: usize) -> Result<CopyStatus> {
        self.status
            .get(copy)
            .copied()
            .ok_or_else(|| Error::CopyState { copy, reason: "no such copy".into() })
    }

    pub fn held_by(&self, party: Party) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.status[i] == CopyStatus::Held(party)).collect()
    }

    pub fn is_joint(&self) -> bool {
        matches!(self.storage, Storage::Joint { .. })
    }

    /// Qubit count of the live joint register, if any.
    pub fn joint_qubits(&self) -> Option<usize> {
        match &self.storage {
            Storage::Joint { state, .. } => Some(state.n()),
            Storage::Independent(_) => None,
        }
    }

    fn expect_held(&self, copy: usize, party: Party) -> Result<()> {
        match self.status(copy)? {
            CopyStatus::Held(p) if p == party => Ok(()),
            other => Err(Error::CopyState {
                copy,
                reason: format!("expected to be held by {party:?}, found {other:?}"),
            }),
        }
    }

    pub fn transfer(&mut self, copy: usize, from: Party, to: Party) -> Result<()> {
        self.expect_held(copy, from)?;
        self.status[copy] = CopyStatus::Held(to);
        Ok(())
    }

    /// Discards a held copy; in joint storage its qubits are traced out.
    pub fn discard(&mut self, copy: usize, holder: Party) -> Result<()> {
        self.discard_many(&[copy], holder)
    }

    pub fn discard_many(&mut self, copies: &[usize], holder: Party) -> Result<()> {
        for &c in copies {
            self.expect_held(c, holder)?;
        }
        for &c in copies {
            self.status[c] = CopyStatus::Discarded;
        }
        if let Storage::Joint { state, blocks } = &mut self.storage {
            let keep_blocks: Vec<usize> = blocks.iter().copied().filter(|b| !copies.contains(b)).collect();
            if keep_blocks.len() != blocks.len() {
                let keep: Vec<usize> = blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| !copies.contains(b))
                    .flat_map(|(i, _)| i * self.n..(i + 1) * self.n)
                    .collect();
                if keep.is_empty() {
                    return Err(Error::CopyState { copy: copies[0], reason: "cannot discard every copy".into() });
                }
                *state = state.partial_trace(&keep)?;
                *blocks = keep_blocks;
            }
        }
        Ok(())
    }

    pub fn select_compute(&mut self, copy: usize) -> Result<()> {
        self.expect_held(copy, Party::Alice)?;
        self.status[copy] = CopyStatus::Compute;
        Ok(())
    }

    fn with_copy<T>(&mut self, copy: usize, f: impl FnOnce(&mut dyn QuantumCopy) -> Result<T>) -> Result<T> {
        let n = self.n;
        match &mut self.storage {
            Storage::Independent(copies) => f(&mut copies[copy]),
            Storage::Joint { state, blocks } => {
                let block = blocks
                    .iter()
                    .position(|&b| b == copy)
                    .ok_or_else(|| Error::CopyState { copy, reason: "not in the joint register".into() })?;
                f(&mut JointBlock { state, offset: block * n, n })
            }
        }
    }

    /// Runs `f` on a copy held by `party`, after which the copy counts as tested.
    pub fn consume_for_test<T>(
        &mut self,
        copy: usize,
        party: Party,
        f: impl FnOnce(&mut dyn QuantumCopy) -> Result<T>,
    ) -> Result<T> {
        self.expect_held(copy, party)?;
        self.status[copy] = CopyStatus::Tested;
        self.with_copy(copy, f)
    }

    /// Runs `f` once on the computation copy.
    pub fn consume_for_compute<T>(
        &mut self,
        copy: usize,
        f: impl FnOnce(&mut dyn QuantumCopy) -> Result<T>,
    ) -> Result<T> {
        if self.status(copy)? != CopyStatus::Compute {
            return Err(Error::CopyState { copy, reason: "not the computation copy".into() });
        }
        if self.computed[copy] {
            return Err(Error::CopyState { copy, reason: "already measured".into() });
        }
        self.computed[copy] = true;
        self.with_copy(copy, f)
    }

    /// Instrumented `<G|rho|G>` of a live copy (invisible to the parties).
    pub fn fidelity(&mut self, copy: usize, g: &Graph) -> Result<f64> {
        match self.status(copy)? {
            CopyStatus::Tested | CopyStatus::Discarded => {
                Err(Error::CopyState { copy, reason: "copy no longer exists".into() })
            }
            _ => self.with_copy(copy, |c| c.fidelity_with_graph(g)),
        }
    }

    /// Probability that every listed observable yields +1 on the current state.
    pub fn all_pass_probability(&self, tests: &[(usize, PauliString)]) -> Result<f64> {
        let mut scratch = self.clone();
        let mut prob = 1.0;
        for (copy, obs) in tests {
            let p = scratch.with_copy(*copy, |c| c.project_pauli(obs, Outcome::Plus))?;
            prob *= p;
            if prob == 0.0 {
                break;
            }
        }
        Ok(prob)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    BobCheating,
    AliceCheating,
    /// Alice rejected without arbitration (private mode).
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Preparation { copies: usize, bad_copies: Vec<usize>, backend: ResolvedBackend },
    Sent { from: Party, to: Party, copies: Vec<usize> },
    Permutation { party: Party, order: Vec<usize> },
    Discard { party: Party, copies: Vec<usize> },
    Split { charlie: Vec<usize>, alice: Vec<usize> },
    ComputeSelected { copy: usize },
    Test { party: Party, copy: usize, record: TestRecord },
    Computation { copy: usize, angles: Vec<f64>, bits: Vec<u8> },
    Decision { accept: bool },
    Release { party: Party, copies: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategies {
    pub bob: BobStrategy,
    pub alice: AliceStrategy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub params: ProtocolParams,
    pub mode: Mode,
    pub toy: bool,
    pub strategies: Strategies,
    pub seed: u64,
    pub backend: ResolvedBackend,
    pub test_mode: MeasurementMode,
    pub events: Vec<Event>,
    pub verdict: Verdict,
    pub verdict_author: Party,
    /// `<G|rho_comp|G>` after Alice's tests and before computation.
    pub instrumented_fidelity: Option<f64>,
    /// Probability that Alice's tests all pass, given the sampled observables.
    pub alice_pass_probability: Option<f64>,
    /// Tests whose outcome needed a random draw.
    pub test_random_branches: usize,
}

impl Transcript {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn tests_by(&self, party: Party) -> impl Iterator<Item = (usize, &TestRecord)> + '_ {
        self.events.iter().filter_map(move |e| match e {
            Event::Test { party: p, copy, record } if *p == party => Some((*copy, record)),
            _ => None,
        })
    }

    pub fn compute_copy(&self) -> Option<usize> {
        self.events.iter().find_map(|e| match e {
            Event::ComputeSelected { copy } => Some(*copy),
            _ => None,
        })
    }

    pub fn bad_copies(&self) -> &[usize] {
        self.events
            .iter()
            .find_map(|e| match e {
                Event::Preparation { bad_copies, .. } => Some(bad_copies.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    /// Replays the event log against the copy state machine and checks the
    /// verdict rules.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(format!("invalid transcript: {msg}")));
        let total = self.params.total_copies();
        let mut status: Vec<Option<CopyStatus>> = vec![None; total];
        let mut computed = vec![false; total];
        let mut decision = None;
        let get = |status: &mut Vec<Option<CopyStatus>>, c: usize| -> Result<CopyStatus> {
            status
                .get(c)
                .copied()
                .flatten()
                .ok_or_else(|| Error::CopyState { copy: c, reason: "unknown copy".into() })
        };
        let held = |s: CopyStatus, p: Party| s == CopyStatus::Held(p);
        for e in &self.events {
            match e {
                Event::Preparation { copies, .. } => {
                    if *copies != total {
                        return fail(format!("{copies} copies prepared, expected {total}"));
                    }
                    status.iter_mut().for_each(|s| *s = Some(CopyStatus::Held(Party::Bob)));
                }
                Event::Sent { from, to, copies } => {
                    for &c in copies {
                        if !held(get(&mut status, c)?, *from) {
                            return fail(format!("copy {c} sent by {from:?} who does not hold it"));
                        }
                        status[c] = Some(CopyStatus::Held(*to));
                    }
                }
                Event::Release { party, copies } => {
                    for &c in copies {
                        if !held(get(&mut status, c)?, *party) {
                            return fail(format!("copy {c} released by {party:?} who does not hold it"));
                        }
                        status[c] = Some(CopyStatus::Discarded);
                    }
                }
                Event::Permutation { order, .. } => {
                    let mut sorted = order.clone();
                    sorted.sort_unstable();
                    if sorted != (0..total).collect::<Vec<_>>() {
                        return fail("permutation is not a bijection".into());
                    }
                }
                Event::Discard { party, copies } => {
                    if copies.len() != self.params.m {
                        return fail(format!("{} copies discarded, expected m", copies.len()));
                    }
                    for &c in copies {
                        if !held(get(&mut status, c)?, *party) {
                            return fail(format!("copy {c} discarded by non-holder"));
                        }
                        status[c] = Some(CopyStatus::Discarded);
                    }
                }
                Event::Split { charlie, alice } => {
                    if charlie.len() != self.params.k || alice.len() != self.params.k + 1 {
                        return fail("split sizes are not k and k+1".into());
                    }
                    for &c in charlie.iter().chain(alice) {
                        if !held(get(&mut status, c)?, Party::Charlie) {
                            return fail(format!("copy {c} split but not held by Charlie"));
                        }
                    }
                    for &c in alice {
                        status[c] = Some(CopyStatus::Held(Party::Alice));
                    }
                }
                Event::ComputeSelected { copy } => {
                    if !held(get(&mut status, *copy)?, Party::Alice) {
                        return fail(format!("compute copy {copy} not held by Alice"));
                    }
                    status[*copy] = Some(CopyStatus::Compute);
                }
                Event::Test { party, copy, record } => {
                    if !held(get(&mut status, *copy)?, *party) {
                        return fail(format!("copy {copy} tested by {party:?} without holding it"));
                    }
                    if record.passed != (record.outcome == Outcome::Plus) {
                        return fail("record pass flag disagrees with outcome".into());
                    }
                    status[*copy] = Some(CopyStatus::Tested);
                }
                Event::Computation { copy, angles, bits } => {
                    if get(&mut status, *copy)? != CopyStatus::Compute || computed[*copy] {
                        return fail(format!("computation on copy {copy} is not allowed"));
                    }
                    if angles.len() != self.params.n || bits.len() != self.params.n {
                        return fail("pattern length differs from n".into());
                    }
                    computed[*copy] = true;
                }
                Event::Decision { accept } => decision = Some(*accept),
            }
        }
        let alice_tests: Vec<&TestRecord> = self.tests_by(Party::Alice).map(|(_, r)| r).collect();
        let alice_passed = alice_tests.iter().all(|r| r.passed);
        match (self.verdict, self.verdict_author) {
            (Verdict::Accepted, Party::Alice) => {
                if decision != Some(true) || alice_tests.len() != self.params.k || !alice_passed {
                    return fail("accepted without k passing tests".into());
                }
            }
            (Verdict::BobCheating | Verdict::AliceCheating, Party::Charlie) => {
                if !self.mode.is_arbitrable() {
                    return fail("arbitration in private mode".into());
                }
                let charlie: Vec<&TestRecord> = self.tests_by(Party::Charlie).map(|(_, r)| r).collect();
                if charlie.len() != self.params.k {
                    return fail("Charlie did not run k tests".into());
                }
                let charlie_passed = charlie.iter().all(|r| r.passed);
                if charlie_passed != (self.verdict == Verdict::AliceCheating) {
                    return fail("verdict disagrees with Charlie's tests".into());
                }
                let early = decision.is_none();
                if early && (self.mode != Mode::ArbitrableCharlieEarlyTest || charlie_passed) {
                    return fail("verdict without Alice's decision".into());
                }
                if !early && decision != Some(false) {
                    return fail("arbitration after an accept".into());
                }
            }
            (Verdict::Rejected, Party::Alice) => {
                if self.mode.is_arbitrable() || decision != Some(false) {
                    return fail("unarbitrated reject outside private mode".into());
                }
            }
            (v, a) => return fail(format!("verdict {v:?} cannot be authored by {a:?}")),
        }
        Ok(())
    }
}

/// Per-trial seed derived from the master seed and the trial index.
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    let digest = Sha256::new()
        .chain_update(b"abqc/trial")
        .chain_update(master.to_le_bytes())
        .chain_update(trial.to_le_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Independent RNG stream for one party within a run.
pub fn party_rng(seed: u64, party: Party) -> ChaCha8Rng {
    let digest = Sha256::new()
        .chain_update(b"abqc/party")
        .chain_update(seed.to_le_bytes())
        .chain_update(party.tag())
        .finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Bob prepares every copy. Returns the registry and the planted positions.
pub fn prepare(
    strategy: &BobStrategy,
    params: &ProtocolParams,
    backend: ResolvedBackend,
    rng: &mut dyn RngCore,
) -> Result<(CopyRegistry, Vec<usize>)> {
    strategy.validate(params)?;
    let g = &params.graph;
    let total = params.total_copies();
    match (strategy, backend) {
        (BobStrategy::Entangled { joint }, ResolvedBackend::DenseJoint) => {
            Ok((CopyRegistry::joint(g.n(), total, joint.build(g, total)?)?, Vec::new()))
        }
        (BobStrategy::Entangled { .. }, _) | (_, ResolvedBackend::DenseJoint) => Err(Error::InvalidStrategy(
            "joint storage is used exactly for entangled strategies".into(),
        )),
        (BobStrategy::Honest, _) => {
            let one = StateSpec::Graph.build(g, backend)?;
            Ok((CopyRegistry::independent(g.n(), vec![one; total])?, Vec::new()))
        }
        (BobStrategy::IidState { state }, _) => {
            let one = state.build(g, backend)?;
            Ok((CopyRegistry::independent(g.n(), vec![one; total])?, Vec::new()))
        }
        (BobStrategy::PlantBad { count, state }, _) => {
            let mut bad = rand::seq::index::sample(rng, total, *count).into_vec();
            bad.sort_unstable();
            let good = StateSpec::Graph.build(g, backend)?;
            let planted = state.build(g, backend)?;
            let copies = (0..total)
                .map(|i| if bad.binary_search(&i).is_ok() { planted.clone() } else { good.clone() })
                .collect();
            Ok((CopyRegistry::independent(g.n(), copies)?, bad))
        }
    }
}

/// Uniformly random order of the held copies; the first `m` are discarded.
pub fn permute_and_discard(
    reg: &mut CopyRegistry,
    holder: Party,
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>> {
    let mut order = reg.held_by(holder);
    if order.len() != reg.len() {
        return Err(Error::InvalidParams("permutation expects the registry in its initial state".into()));
    }
    if m >= order.len() {
        return Err(Error::InvalidParams(format!("cannot discard {m} of {} copies", order.len())));
    }
    order.shuffle(rng);
    reg.discard_many(&order[..m], holder)?;
    Ok(order)
}

/// Charlie keeps the next `k` copies of the permuted order and sends the rest to Alice.
pub fn split(reg: &mut CopyRegistry, order: &[usize], params: &ProtocolParams) -> Result<(Vec<usize>, Vec<usize>)> {
    let live = &order[params.m..];
    if live.len() != 2 * params.k + 1 {
        return Err(Error::InvalidParams(format!(
            "{} live copies, expected 2k+1 = {}",
            live.len(),
            2 * params.k + 1
        )));
    }
    let charlie = live[..params.k].to_vec();
    let alice = live[params.k..].to_vec();
    for &c in &alice {
        reg.transfer(c, Party::Charlie, Party::Alice)?;
    }
    Ok((charlie, alice))
}

/// Per-copy test records in execution order.
pub type TestLog = Vec<(usize, TestRecord)>;

/// `k` tests on copies held by `party`.
pub fn party_tests(
    reg: &mut CopyRegistry,
    copies: &[usize],
    party: Party,
    g: &Graph,
    test: &dyn HonestyTest,
    rng: &mut dyn RngCore,
) -> Result<(bool, TestLog, usize)> {
    let samples = copies.iter().map(|_| test.sample(g, rng)).collect::<Result<Vec<_>>>()?;
    run_sampled_tests(reg, copies, samples, party, test, rng)
}

fn run_sampled_tests(
    reg: &mut CopyRegistry,
    copies: &[usize],
    samples: Vec<(Vec<usize>, PauliString)>,
    party: Party,
    test: &dyn HonestyTest,
    rng: &mut dyn RngCore,
) -> Result<(bool, TestLog, usize)> {
    let mut all = true;
    let mut random = 0;
    let mut records = Vec::with_capacity(copies.len());
    for (&copy, (subset, observable)) in copies.iter().zip(samples) {
        let done = reg.consume_for_test(copy, party, |c| test.execute(c, subset, observable, rng))?;
        all &= done.record.passed;
        random += usize::from(!done.forced);
        records.push((copy, done.record));
    }
    Ok((all, records, random))
}

/// Measures qubit `i` in the eigenbasis of `cos(angle_i) X + sin(angle_i) Y`; bit 0 means +1.
pub fn execute_pattern(copy: &mut dyn QuantumCopy, angles: &[f64], rng: &mut dyn RngCore) -> Result<Vec<u8>> {
    if angles.len() != copy.num_qubits() {
        return Err(Error::LengthMismatch { expected: copy.num_qubits(), actual: angles.len() });
    }
    angles
        .iter()
        .enumerate()
        .map(|(q, &theta)| Ok(copy.measure_equatorial(q, theta, rng)?.outcome.bit()))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AliceResult {
    pub passed: bool,
    pub compute_copy: usize,
    pub records: Vec<(usize, TestRecord)>,
    pub bits: Vec<u8>,
    pub instrumented_fidelity: f64,
    pub pass_probability: f64,
    pub random_branches: usize,
}

/// Alice picks the computation copy at random, tests the other `k`,
/// then runs the measurement pattern on the computation copy.
pub fn alice_test_and_compute(
    reg: &mut CopyRegistry,
    batch: &[usize],
    params: &ProtocolParams,
    test: &dyn HonestyTest,
    angles: &[f64],
    rng: &mut dyn RngCore,
) -> Result<AliceResult> {
    if batch.len() != params.k + 1 {
        return Err(Error::InvalidParams(format!("Alice holds {} copies, expected k+1", batch.len())));
    }
    let g = &params.graph;
    let pick = rng.random_range(0..batch.len());
    let compute_copy = batch[pick];
    reg.select_compute(compute_copy)?;
    let tested: Vec<usize> = batch.iter().copied().filter(|&c| c != compute_copy).collect();
    let samples = tested.iter().map(|_| test.sample(g, rng)).collect::<Result<Vec<_>>>()?;
    let planned: Vec<(usize, PauliString)> =
        tested.iter().copied().zip(samples.iter().map(|(_, o)| o.clone())).collect();
    let pass_probability = reg.all_pass_probability(&planned)?;
    let (passed, records, random_branches) = run_sampled_tests(reg, &tested, samples, Party::Alice, test, rng)?;
    let instrumented_fidelity = reg.fidelity(compute_copy, g)?;
    let bits = reg.consume_for_compute(compute_copy, |c| execute_pattern(c, angles, rng))?;
    Ok(AliceResult { passed, compute_copy, records, bits, instrumented_fidelity, pass_probability, random_branches })
}

/// Alice's decision.
pub fn alice_decision(passed: bool, strategy: AliceStrategy) -> bool {
    match strategy {
        AliceStrategy::Honest => passed,
        AliceStrategy::FalseReject => false,
    }
}

/// Charlie tests the stored copies; all passing means Alice lied.
pub fn arbitrate(
    reg: &mut CopyRegistry,
    store: &[usize],
    params: &ProtocolParams,
    test: &dyn HonestyTest,
    rng: &mut dyn RngCore,
) -> Result<(Verdict, TestLog, usize)> {
    if store.len() != params.k {
        return Err(Error::InvalidParams(format!("Charlie stores {} copies, expected k", store.len())));
    }
    let (passed, records, random) = party_tests(reg, store, Party::Charlie, &params.graph, test, rng)?;
    let verdict = if passed { Verdict::AliceCheating } else { Verdict::BobCheating };
    Ok((verdict, records, random))
}

struct RunState {
    events: Vec<Event>,
    random_branches: usize,
}

impl RunState {
    fn push_tests(&mut self, party: Party, records: Vec<(usize, TestRecord)>, random: usize) {
        self.random_branches += random;
        self.events.extend(records.into_iter().map(|(copy, record)| Event::Test { party, copy, record }));
    }
}

/// Runs the whole protocol for one seed. Deterministic in all inputs.
pub fn run_protocol(
    params: &ProtocolParams,
    bob: &BobStrategy,
    alice: AliceStrategy,
    options: &RunOptions,
    seed: u64,
) -> Result<Transcript> {
    params.validate()?;
    let backend = resolve_backend(params, bob, options)?;
    let angles = options.pattern_for(params.n)?;
    let test = StabilizerSamplingTest::new(options.test_mode);
    let mut bob_rng = party_rng(seed, Party::Bob);
    let mut charlie_rng = party_rng(seed, Party::Charlie);
    let mut alice_rng = party_rng(seed, Party::Alice);

    let (mut reg, bad_copies) = prepare(bob, params, backend, &mut bob_rng)?;
    let total = reg.len();
    let mut run = RunState {
        events: vec![Event::Preparation { copies: total, bad_copies, backend }],
        random_branches: 0,
    };
    let finish = |run: RunState, verdict, author, alice_res: Option<&AliceResult>| Transcript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        params: params.clone(),
        mode: params.mode,
        toy: params.toy,
        strategies: Strategies { bob: bob.clone(), alice },
        seed,
        backend,
        test_mode: options.test_mode,
        events: run.events,
        verdict,
        verdict_author: author,
        instrumented_fidelity: alice_res.map(|a| a.instrumented_fidelity),
        alice_pass_probability: alice_res.map(|a| a.pass_probability),
        test_random_branches: run.random_branches,
    };

    let receiver = if params.mode.is_arbitrable() { Party::Charlie } else { Party::Alice };
    for c in 0..total {
        reg.transfer(c, Party::Bob, receiver)?;
    }
    run.events.push(Event::Sent { from: Party::Bob, to: receiver, copies: (0..total).collect() });

    let permute_rng: &mut dyn RngCore = if params.mode.is_arbitrable() { &mut charlie_rng } else { &mut alice_rng };
    let order = permute_and_discard(&mut reg, receiver, params.m, permute_rng)?;
    run.events.push(Event::Permutation { party: receiver, order: order.clone() });
    run.events.push(Event::Discard { party: receiver, copies: order[..params.m].to_vec() });

    let (store, batch) = if params.mode.is_arbitrable() {
        let (store, batch) = split(&mut reg, &order, params)?;
        run.events.push(Event::Split { charlie: store.clone(), alice: batch.clone() });
        if params.mode == Mode::ArbitrableCharlieEarlyTest {
            let (passed, records, random) =
                party_tests(&mut reg, &store, Party::Charlie, &params.graph, &test, &mut charlie_rng)?;
            run.push_tests(Party::Charlie, records, random);
            if !passed {
                return Ok(finish(run, Verdict::BobCheating, Party::Charlie, None));
            }
        }
        (store, batch)
    } else {
        (Vec::new(), order[params.m..].to_vec())
    };

    let result = alice_test_and_compute(&mut reg, &batch, params, &test, &angles, &mut alice_rng)?;
    run.events.push(Event::ComputeSelected { copy: result.compute_copy });
    run.push_tests(Party::Alice, result.records.clone(), result.random_branches);
    run.events.push(Event::Computation {
        copy: result.compute_copy,
        angles: angles.clone(),
        bits: result.bits.clone(),
    });

    let accept = alice_decision(result.passed, alice);
    run.events.push(Event::Decision { accept });
    if accept {
        if params.mode == Mode::Arbitrable {
            reg.discard_many(&store, Party::Charlie)?;
            run.events.push(Event::Release { party: Party::Charlie, copies: store });
        }
        return Ok(finish(run, Verdict::Accepted, Party::Alice, Some(&result)));
    }
    match params.mode {
        Mode::PrivateOnly => Ok(finish(run, Verdict::Rejected, Party::Alice, Some(&result))),
        Mode::ArbitrableCharlieEarlyTest => {
            // Charlie's early tests already passed and consumed the stored copies.
            Ok(finish(run, Verdict::AliceCheating, Party::Charlie, Some(&result)))
        }
        Mode::Arbitrable => {
            let (verdict, records, random) = arbitrate(&mut reg, &store, params, &test, &mut charlie_rng)?;
            run.push_tests(Party::Charlie, records, random);
            Ok(finish(run, verdict, Party::Charlie, Some(&result)))
        }
    }
}

/// Private-verification variant: no arbitrator, honest Alice.
pub fn run_private_mode(
    params: &ProtocolParams,
    bob: &BobStrategy,
    options: &RunOptions,
    seed: u64,
) -> Result<Transcript> {
    if params.mode != Mode::PrivateOnly {
        return Err(Error::InvalidParams("private runs need mode = private_only".into()));
    }
    run_protocol(params, bob, AliceStrategy::Honest, options, seed)
}
