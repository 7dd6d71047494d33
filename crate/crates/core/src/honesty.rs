//! Graph-state honesty test: measure a uniformly random element of the
//! stabilizer group and pass on outcome +1.
//!
//! Averaged over all 2^n subsets the pass operator is `(I + |G><G|) / 2`,
//! so a copy in state `sigma` passes with probability `(1 + <G|sigma|G>) / 2`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::{stabilizer_element, PauliString};
use crate::state::{Measurement, Outcome, QuantumCopy, FORCED_EPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub subset: Vec<usize>,
    pub observable: PauliString,
    pub outcome: Outcome,
    pub passed: bool,
}

/// How the sampled observable is read out.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// One joint Pauli measurement.
    #[default]
    Joint,
    /// Each qubit measured in its local Pauli basis; the outcome is the signed parity.
    LocalParity,
}

/// A single executed test together with whether any randomness decided it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutedTest {
    pub record: TestRecord,
    pub forced: bool,
}

/// Plug-in point for alternative graph-state tests.
pub trait HonestyTest {
    fn name(&self) -> &'static str;

    /// Draws the randomness that selects the measured observable.
    fn sample(&self, g: &Graph, rng: &mut dyn RngCore) -> Result<(Vec<usize>, PauliString)>;

    /// Measures a previously sampled observable on one copy.
    fn execute(
        &self,
        copy: &mut dyn QuantumCopy,
        subset: Vec<usize>,
        observable: PauliString,
        rng: &mut dyn RngCore,
    ) -> Result<ExecutedTest>;

    fn run(&self, copy: &mut dyn QuantumCopy, g: &Graph, rng: &mut dyn RngCore) -> Result<ExecutedTest> {
        check_dims(copy, g)?;
        let (subset, observable) = self.sample(g, rng)?;
        self.execute(copy, subset, observable, rng)
    }
}

fn check_dims(copy: &dyn QuantumCopy, g: &Graph) -> Result<()> {
    if copy.num_qubits() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), actual: copy.num_qubits() });
    }
    Ok(())
}

/// Uniform subset of vertices (each included with probability 1/2) and the
/// product of the corresponding generators.
pub fn sample_stabilizer_element(g: &Graph, rng: &mut dyn RngCore) -> Result<(Vec<usize>, PauliString)> {
    let subset: Vec<usize> = (0..g.n()).filter(|_| rng.random::<bool>()).collect();
    let observable = stabilizer_element(g, &subset)?;
    Ok((subset, observable))
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct StabilizerSamplingTest {
    pub mode: MeasurementMode,
}

impl StabilizerSamplingTest {
    pub fn new(mode: MeasurementMode) -> Self {
        StabilizerSamplingTest { mode }
    }
}

impl HonestyTest for StabilizerSamplingTest {
    fn name(&self) -> &'static str {
        match self.mode {
            MeasurementMode::Joint => "stabilizer-sampling",
            MeasurementMode::LocalParity => "stabilizer-sampling-local",
        }
    }

    fn sample(&self, g: &Graph, rng: &mut dyn RngCore) -> Result<(Vec<usize>, PauliString)> {
        sample_stabilizer_element(g, rng)
    }

    fn execute(
        &self,
        copy: &mut dyn QuantumCopy,
        subset: Vec<usize>,
        observable: PauliString,
        rng: &mut dyn RngCore,
    ) -> Result<ExecutedTest> {
        if copy.num_qubits() != observable.len() {
            return Err(Error::LengthMismatch { expected: observable.len(), actual: copy.num_qubits() });
        }
        let m = match self.mode {
            MeasurementMode::Joint => copy.measure_pauli(&observable, rng)?,
            MeasurementMode::LocalParity => measure_local_parity(copy, &observable, rng)?,
        };
        let passed = m.outcome == Outcome::Plus;
        Ok(ExecutedTest {
            record: TestRecord { subset, observable, outcome: m.outcome, passed },
            forced: m.forced,
        })
    }
}

/// Measures each non-identity letter separately and returns the signed parity.
fn measure_local_parity(
    copy: &mut dyn QuantumCopy,
    observable: &PauliString,
    rng: &mut dyn RngCore,
) -> Result<Measurement> {
    let sign = observable.sign().ok_or_else(|| Error::NonHermitian(observable.to_string()))?;
    let n = observable.len();
    let p_plus = ((1.0 + copy.pauli_expectation(observable)?) / 2.0).clamp(0.0, 1.0);
    let mut outcome = if sign > 0 { Outcome::Plus } else { Outcome::Minus };
    for (q, &letter) in observable.letters().iter().enumerate() {
        if letter == crate::pauli::Pauli::I {
            continue;
        }
        let m = copy.measure_pauli(&PauliString::single(n, q, letter), rng)?;
        outcome = outcome.times(m.outcome);
    }
    // The parity is deterministic exactly when the joint outcome would be.
    let probability = if outcome == Outcome::Plus { p_plus } else { 1.0 - p_plus };
    let forced = !(FORCED_EPS..=1.0 - FORCED_EPS).contains(&p_plus);
    Ok(Measurement { outcome, probability, forced })
}

/// One joint-measurement test on one copy.
pub fn graph_state_test(copy: &mut dyn QuantumCopy, g: &Graph, rng: &mut dyn RngCore) -> Result<TestRecord> {
    Ok(StabilizerSamplingTest::default().run(copy, g, rng)?.record)
}

/// Exact pass probability of one test with a fixed observable.
pub fn pass_probability_for(copy: &dyn QuantumCopy, observable: &PauliString) -> Result<f64> {
    Ok((1.0 + copy.pauli_expectation(observable)?) / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestBatch {
    pub all_passed: bool,
    pub records: Vec<TestRecord>,
    /// Number of tests whose outcome required a random draw.
    pub random_branches: usize,
}

/// Runs one test per copy. Every observable is sampled before any copy is measured.
pub fn run_k_tests(
    copies: &mut [&mut dyn QuantumCopy],
    g: &Graph,
    test: &dyn HonestyTest,
    rng: &mut dyn RngCore,
) -> Result<TestBatch> {
    if copies.is_empty() {
        return Err(Error::InvalidParams("no copies to test".into()));
    }
    for c in copies.iter() {
        check_dims(&**c, g)?;
    }
    let samples = (0..copies.len()).map(|_| test.sample(g, rng)).collect::<Result<Vec<_>>>()?;
    let mut batch = TestBatch { all_passed: true, records: Vec::with_capacity(copies.len()), random_branches: 0 };
    for (copy, (subset, observable)) in copies.iter_mut().zip(samples) {
        let done = test.execute(&mut **copy, subset, observable, rng)?;
        batch.all_passed &= done.record.passed;
        batch.random_branches += usize::from(!done.forced);
        batch.records.push(done.record);
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{DensityState, PureState};
    use crate::tableau::StabilizerTableau;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    fn within_3_sigma(hits: usize, trials: usize, p: f64) -> bool {
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        ((hits as f64 / trials as f64) - p).abs() <= 3.0 * sigma
    }

    #[test]
    fn subsets_are_uniform() {
        let g = Graph::path(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 1 << 16;
        let mut counts = [0usize; 8];
        for _ in 0..trials {
            let (s, obs) = sample_stabilizer_element(&g, &mut rng).unwrap();
            assert_eq!(obs, stabilizer_element(&g, &s).unwrap());
            let idx = s.iter().fold(0, |acc, &v| acc | 1 << v);
            counts[idx] += 1;
        }
        for c in counts {
            assert!(within_3_sigma(c, trials, 0.125), "{counts:?}");
        }
    }

    #[test]
    fn graph_state_always_passes() {
        let g = Graph::cycle(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in [MeasurementMode::Joint, MeasurementMode::LocalParity] {
            let test = StabilizerSamplingTest::new(mode);
            for _ in 0..200 {
                let mut copy = PureState::graph_state(&g).unwrap();
                let done = test.run(&mut copy, &g, &mut rng).unwrap();
                assert!(done.record.passed);
                assert!(done.forced);
                assert_eq!(done.record.outcome, Outcome::Plus);
            }
        }
    }

    #[test]
    fn orthogonal_copies_pass_half_the_time() {
        let g = edge();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bad = StabilizerTableau::from_graph_with_z_flips(&g, &[0]).unwrap();
        let trials = 10_000;
        let passes = (0..trials)
            .filter(|_| graph_state_test(&mut bad.clone(), &g, &mut rng).unwrap().passed)
            .count();
        assert!(within_3_sigma(passes, trials, 0.5), "{passes}");
    }

    #[test]
    fn maximally_mixed_two_qubits() {
        let g = edge();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mixed = DensityState::maximally_mixed(2).unwrap();
        let trials = 10_000;
        let passes = (0..trials)
            .filter(|_| graph_state_test(&mut mixed.clone(), &g, &mut rng).unwrap().passed)
            .count();
        assert!(within_3_sigma(passes, trials, 0.625), "{passes}");
    }

    #[test]
    fn local_parity_matches_joint_distribution() {
        let g = Graph::path(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sigma = DensityState::random_mixture(3, &mut rng).unwrap();
        let obs = stabilizer_element(&g, &[0, 1, 2]).unwrap();
        let p = pass_probability_for(&sigma, &obs).unwrap();
        let test = StabilizerSamplingTest::new(MeasurementMode::LocalParity);
        let trials = 10_000;
        let passes = (0..trials)
            .filter(|_| {
                test.execute(&mut sigma.clone(), vec![0, 1, 2], obs.clone(), &mut rng)
                    .unwrap()
                    .record
                    .passed
            })
            .count();
        assert!(within_3_sigma(passes, trials, p), "{passes} vs {p}");
    }

    #[test]
    fn record_invariants() {
        let g = Graph::path(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sigma = DensityState::random_mixture(3, &mut rng).unwrap();
        for _ in 0..50 {
            let r = graph_state_test(&mut sigma.clone(), &g, &mut rng).unwrap();
            assert_eq!(r.passed, r.outcome == Outcome::Plus);
            assert_eq!(r.observable, stabilizer_element(&g, &r.subset).unwrap());
        }
    }

    #[test]
    fn batch_counts_and_errors() {
        let g = edge();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let test = StabilizerSamplingTest::default();
        let mut a = PureState::graph_state(&g).unwrap();
        let mut b = PureState::graph_state(&g).unwrap();
        let mut c = PureState::graph_state(&g).unwrap();
        let mut copies: Vec<&mut dyn QuantumCopy> = vec![&mut a, &mut b, &mut c];
        let batch = run_k_tests(&mut copies, &g, &test, &mut rng).unwrap();
        assert!(batch.all_passed);
        assert_eq!(batch.records.len(), 3);
        assert_eq!(batch.random_branches, 0);

        let mut none: Vec<&mut dyn QuantumCopy> = vec![];
        assert!(run_k_tests(&mut none, &g, &test, &mut rng).is_err());

        let mut wrong = PureState::basis(3, 0).unwrap();
        assert!(graph_state_test(&mut wrong, &g, &mut rng).is_err());
    }

    #[test]
    fn record_json_shape() {
        let r = TestRecord {
            subset: vec![0, 1],
            observable: "+YY".parse().unwrap(),
            outcome: Outcome::Minus,
            passed: false,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"subset":[0,1],"observable":"+YY","outcome":-1,"passed":false}"#);
        assert_eq!(serde_json::from_str::<TestRecord>(&json).unwrap(), r);
    }
}
