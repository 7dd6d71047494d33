//! Stabilizer-generator tableau for graph states under Pauli measurements.
//!
//! Only the n stabilizer rows are kept (no destabilizers), so membership and
//! deterministic outcomes are decided by Gaussian elimination over GF(2).

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::{graph_stabilizer_generator, Pauli, PauliString};
use crate::state::{quarter_turns, Outcome, QuantumCopy};

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerTableau {
    n: usize,
    rows: Vec<PauliString>,
}

/// Symplectic bit vector `(x | z)` of a Pauli string.
fn symplectic(p: &PauliString) -> Vec<bool> {
    let n = p.len();
    let mut bits = vec![false; 2 * n];
    for (q, l) in p.letters().iter().enumerate() {
        bits[q] = l.x();
        bits[n + q] = l.z();
    }
    bits
}

fn xor_into(dst: &mut [bool], src: &[bool]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

/// Row-reduces `rows` in place, returning the pivot column of each nonzero
/// leading row. `combos` tracks which original rows were combined.
fn reduce(rows: &mut [Vec<bool>], combos: &mut [Vec<bool>]) -> Vec<(usize, usize)> {
    let width = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..width {
        let Some(found) = (next..rows.len()).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(next, found);
        combos.swap(next, found);
        for r in 0..rows.len() {
            if r != next && rows[r][col] {
                let (src_row, src_combo) = (rows[next].clone(), combos[next].clone());
                xor_into(&mut rows[r], &src_row);
                xor_into(&mut combos[r], &src_combo);
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    pivots
}

impl StabilizerTableau {
    /// Tableau whose rows are exactly the graph generators.
    pub fn from_graph(g: &Graph) -> Result<Self> {
        let rows = (0..g.n()).map(|v| graph_stabilizer_generator(g, v)).collect::<Result<_>>()?;
        Ok(StabilizerTableau { n: g.n(), rows })
    }

    /// `Z_q |G>` for every `q` in `flips`: flips the sign of generator `q`.
    pub fn from_graph_with_z_flips(g: &Graph, flips: &[usize]) -> Result<Self> {
        let mut t = StabilizerTableau::from_graph(g)?;
        for &q in flips {
            if q >= g.n() {
                return Err(Error::VertexOutOfRange { vertex: q, n: g.n() });
            }
            t.rows[q] = t.rows[q].negated();
        }
        Ok(t)
    }

    pub fn from_rows(rows: Vec<PauliString>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidTableau("no rows".into()));
        }
        let t = StabilizerTableau { n, rows };
        t.check_invariants()?;
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliString] {
        &self.rows
    }

    /// Rows have real phase, pairwise commute and have symplectic rank n.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.n {
                return Err(Error::LengthMismatch { expected: self.n, actual: r.len() });
            }
            if !r.is_hermitian() {
                return Err(Error::InvalidTableau(format!("row {i} has imaginary phase")));
            }
            for s in &self.rows[..i] {
                if !r.commutes_with(s)? {
                    return Err(Error::InvalidTableau(format!("row {i} anticommutes")));
                }
            }
        }
        let mut bits: Vec<Vec<bool>> = self.rows.iter().map(symplectic).collect();
        let mut combos = vec![Vec::new(); self.n];
        let rank = reduce(&mut bits, &mut combos).len();
        if rank != self.n {
            return Err(Error::InvalidTableau(format!("rank {rank} < {}", self.n)));
        }
        Ok(())
    }

    /// Indices of rows whose product equals `p` up to phase.
    fn decompose(&self, p: &PauliString) -> Option<Vec<usize>> {
        let mut bits: Vec<Vec<bool>> = self.rows.iter().map(symplectic).collect();
        let mut combos: Vec<Vec<bool>> =
            (0..self.n).map(|i| (0..self.n).map(|j| i == j).collect()).collect();
        let pivots = reduce(&mut bits, &mut combos);
        let mut target = symplectic(p);
        let mut used = vec![false; self.n];
        for (row, col) in pivots {
            if target[col] {
                xor_into(&mut target, &bits[row]);
                xor_into(&mut used, &combos[row]);
            }
        }
        target
            .iter()
            .all(|b| !b)
            .then(|| (0..self.n).filter(|&i| used[i]).collect())
    }

    /// The sign with which `p` belongs to the stabilizer group, if it does.
    pub fn in_stabilizer_group(&self, p: &PauliString) -> Result<Option<Outcome>> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: p.len() });
        }
        for r in &self.rows {
            if !r.commutes_with(p)? {
                return Ok(None);
            }
        }
        let Some(indices) = self.decompose(p) else {
            return Ok(None);
        };
        let product = indices
            .iter()
            .try_fold(PauliString::identity(self.n), |acc, &i| acc.multiply(&self.rows[i]))?;
        Ok(if product.phase() == p.phase() {
            Some(Outcome::Plus)
        } else if product.phase() == p.phase().negate() {
            Some(Outcome::Minus)
        } else {
            None
        })
    }

    fn anticommuting_rows(&self, p: &PauliString) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            if !r.commutes_with(p)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    fn check_observable(&self, p: &PauliString) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: p.len() });
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        Ok(())
    }

    fn equatorial_pauli(&self, qubit: usize, theta: f64) -> Result<PauliString> {
        if qubit >= self.n {
            return Err(Error::VertexOutOfRange { vertex: qubit, n: self.n });
        }
        let turns = quarter_turns(theta).ok_or(Error::NonCliffordAngle(theta))?;
        let letter = if turns % 2 == 0 { Pauli::X } else { Pauli::Y };
        let p = PauliString::single(self.n, qubit, letter);
        Ok(if turns >= 2 { p.negated() } else { p })
    }

    /// Fidelity of the stabilizer state with `|G>`.
    ///
    /// Graph-group elements lying in +-S form the kernel of the commutation
    /// matrix; the overlap is 2^(dim - n) if every kernel element carries the
    /// same sign in both groups and 0 otherwise.
    pub fn graph_overlap(&self, g: &Graph) -> Result<f64> {
        if g.n() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: g.n() });
        }
        let gens: Vec<PauliString> =
            (0..self.n).map(|v| graph_stabilizer_generator(g, v)).collect::<Result<_>>()?;
        let mut a: Vec<Vec<bool>> = Vec::with_capacity(self.n);
        for s in &self.rows {
            let row = gens.iter().map(|gi| gi.commutes_with(s).map(|c| !c)).collect::<Result<_>>()?;
            a.push(row);
        }
        let mut combos = vec![Vec::new(); self.n];
        let pivots = reduce(&mut a, &mut combos);
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let free: Vec<usize> = (0..self.n).filter(|c| !pivot_cols.contains(c)).collect();
        for &f in &free {
            // kernel vector with a 1 at the free column and pivots solved from the reduced rows
            let mut v = vec![false; self.n];
            v[f] = true;
            for &(row, col) in &pivots {
                if a[row][f] {
                    v[col] = true;
                }
            }
            let element = (0..self.n)
                .filter(|&i| v[i])
                .try_fold(PauliString::identity(self.n), |acc, i| acc.multiply(&gens[i]))?;
            match self.in_stabilizer_group(&element)? {
                Some(Outcome::Plus) => {}
                Some(Outcome::Minus) => return Ok(0.0),
                None => {
                    return Err(Error::InvalidTableau("kernel element outside the group".into()))
                }
            }
        }
        Ok(2f64.powi(free.len() as i32 - self.n as i32))
    }
}

impl QuantumCopy for StabilizerTableau {
    fn num_qubits(&self) -> usize {
        self.n
    }

    fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_observable(p)?;
        Ok(match self.in_stabilizer_group(p)? {
            Some(o) => o.sign(),
            None => 0.0,
        })
    }

    fn project_pauli(&mut self, p: &PauliString, outcome: Outcome) -> Result<f64> {
        self.check_observable(p)?;
        let anti = self.anticommuting_rows(p)?;
        let Some((&pivot, rest)) = anti.split_first() else {
            let sign = self
                .in_stabilizer_group(p)?
                .ok_or_else(|| Error::InvalidTableau("commuting observable not generated".into()))?;
            return Ok(if sign == outcome { 1.0 } else { 0.0 });
        };
        let pivot_row = self.rows[pivot].clone();
        for &j in rest {
            self.rows[j] = self.rows[j].multiply(&pivot_row)?;
        }
        self.rows[pivot] = match outcome {
            Outcome::Plus => p.clone(),
            Outcome::Minus => p.negated(),
        };
        Ok(0.5)
    }

    fn equatorial_expectation(&self, qubit: usize, theta: f64) -> Result<f64> {
        let p = self.equatorial_pauli(qubit, theta)?;
        self.pauli_expectation(&p)
    }

    fn project_equatorial(&mut self, qubit: usize, theta: f64, outcome: Outcome) -> Result<f64> {
        let p = self.equatorial_pauli(qubit, theta)?;
        self.project_pauli(&p, outcome)
    }

    fn fidelity_with_graph(&self, g: &Graph) -> Result<f64> {
        self.graph_overlap(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::stabilizer_element;
    use crate::state::PureState;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
        let letters = (0..n).map(|_| Pauli::from_bits(rng.random(), rng.random())).collect();
        let sign = if rng.random() { crate::pauli::Phase::PLUS_ONE } else { crate::pauli::Phase::MINUS_ONE };
        PauliString::new(sign, letters)
    }

    #[test]
    fn rows_from_graph() {
        let t = StabilizerTableau::from_graph(&Graph::empty(1).unwrap()).unwrap();
        assert_eq!(t.rows(), &[p("+X")]);
        let t = StabilizerTableau::from_graph(&edge()).unwrap();
        assert_eq!(t.rows(), &[p("+XZ"), p("+ZX")]);
        let t = StabilizerTableau::from_graph(&Graph::cycle(5).unwrap()).unwrap();
        assert_eq!(t.rows().len(), 5);
        t.check_invariants().unwrap();
    }

    #[test]
    fn membership() {
        let t = StabilizerTableau::from_graph(&edge()).unwrap();
        assert_eq!(t.in_stabilizer_group(&p("+YY")).unwrap(), Some(Outcome::Plus));
        assert_eq!(t.in_stabilizer_group(&p("-YY")).unwrap(), Some(Outcome::Minus));
        assert_eq!(t.in_stabilizer_group(&p("+ZZ")).unwrap(), None);
        assert_eq!(t.in_stabilizer_group(&p("+II")).unwrap(), Some(Outcome::Plus));
        assert_eq!(t.in_stabilizer_group(&p("+iYY")).unwrap(), None);
        assert!(t.in_stabilizer_group(&p("+X")).is_err());
    }

    #[test]
    fn random_outcome_on_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = StabilizerTableau::from_graph(&Graph::empty(1).unwrap()).unwrap();
        assert_eq!(t.pauli_expectation(&p("+Z")).unwrap(), 0.0);
        let mut counts = [0usize; 2];
        for _ in 0..4000 {
            let mut c = t.clone();
            let m = c.measure_pauli(&p("+Z"), &mut rng).unwrap();
            assert!(!m.forced);
            counts[m.outcome.bit() as usize] += 1;
            // repeat is deterministic
            let again = c.measure_pauli(&p("+Z"), &mut rng).unwrap();
            assert!(again.forced);
            assert_eq!(again.outcome, m.outcome);
            c.check_invariants().unwrap();
        }
        assert!((counts[0] as i64 - 2000).abs() < 95, "{counts:?}");
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut t = StabilizerTableau::from_graph(&edge()).unwrap();
        assert!(matches!(t.project_pauli(&p("+iXZ"), Outcome::Plus), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn from_rows_validates() {
        assert!(StabilizerTableau::from_rows(vec![p("+XZ"), p("+ZX")]).is_ok());
        assert!(StabilizerTableau::from_rows(vec![p("+XI"), p("+ZI")]).is_err());
        assert!(StabilizerTableau::from_rows(vec![p("+XI"), p("+XI")]).is_err());
        assert!(StabilizerTableau::from_rows(vec![p("+iXI"), p("+IZ")]).is_err());
    }

    /// Dense oracle: probabilities and post-measurement states agree along random sequences.
    #[test]
    fn matches_dense_simulation_along_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for g in Graph::all_connected(n).unwrap() {
                let mut tab = StabilizerTableau::from_graph(&g).unwrap();
                let mut dense = PureState::graph_state(&g).unwrap();
                for _ in 0..12 {
                    let obs = random_pauli(n, &mut rng);
                    let pt = (1.0 + tab.pauli_expectation(&obs).unwrap()) / 2.0;
                    let pd = (1.0 + dense.pauli_expectation(&obs).unwrap()) / 2.0;
                    assert!((pt - pd).abs() < 1e-9, "{g:?} {obs}: {pt} vs {pd}");
                    let m = tab.measure_pauli(&obs, &mut rng).unwrap();
                    let prob = dense.project_pauli(&obs, m.outcome).unwrap();
                    assert!((prob - m.probability).abs() < 1e-9);
                    tab.check_invariants().unwrap();
                }
            }
        }
    }

    #[test]
    fn overlap_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=4 {
            for g in Graph::all_connected(n).unwrap().into_iter().take(6) {
                for other in Graph::all_connected(n).unwrap().into_iter().take(6) {
                    let mut tab = StabilizerTableau::from_graph(&other).unwrap();
                    let mut dense = PureState::graph_state(&other).unwrap();
                    for _ in 0..3 {
                        let obs = random_pauli(n, &mut rng);
                        let m = tab.measure_pauli(&obs, &mut rng).unwrap();
                        dense.project_pauli(&obs, m.outcome).unwrap();
                        let ft = tab.fidelity_with_graph(&g).unwrap();
                        let fd = dense.fidelity_with_graph(&g).unwrap();
                        assert!((ft - fd).abs() < 1e-9, "{ft} vs {fd}");
                    }
                }
            }
        }
    }

    #[test]
    fn z_flips_are_orthogonal() {
        let g = Graph::cycle(5).unwrap();
        let t = StabilizerTableau::from_graph_with_z_flips(&g, &[2]).unwrap();
        assert_eq!(t.fidelity_with_graph(&g).unwrap(), 0.0);
        assert_eq!(StabilizerTableau::from_graph(&g).unwrap().fidelity_with_graph(&g).unwrap(), 1.0);
        let twice = StabilizerTableau::from_graph_with_z_flips(&g, &[1, 1]).unwrap();
        assert_eq!(twice.fidelity_with_graph(&g).unwrap(), 1.0);
        let all = stabilizer_element(&g, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(t.in_stabilizer_group(&all).unwrap(), Some(Outcome::Minus));
    }

    #[test]
    fn clifford_equatorial_angles_only() {
        use std::f64::consts::PI;
        let t = StabilizerTableau::from_graph(&Graph::empty(1).unwrap()).unwrap();
        assert_eq!(t.equatorial_expectation(0, 0.0).unwrap(), 1.0);
        assert_eq!(t.equatorial_expectation(0, PI).unwrap(), -1.0);
        assert_eq!(t.equatorial_expectation(0, PI / 2.0).unwrap(), 0.0);
        assert!(matches!(t.equatorial_expectation(0, 0.4), Err(Error::NonCliffordAngle(_))));
    }
}
