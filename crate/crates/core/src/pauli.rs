//! Signed Pauli strings over n qubits.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Single-qubit product `self * rhs` as (power of i, letter).
    pub fn product(self, rhs: Pauli) -> (u8, Pauli) {
        let (x1, z1, x2, z2) = (self.x() as i8, self.z() as i8, rhs.x() as i8, rhs.z() as i8);
        let exponent = match (x1, z1) {
            (0, 0) => 0,
            (1, 1) => z2 - x2,
            (1, 0) => z2 * (2 * x2 - 1),
            _ => x2 * (1 - 2 * z2),
        };
        (exponent.rem_euclid(4) as u8, Pauli::from_bits(self.x() ^ rhs.x(), self.z() ^ rhs.z()))
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Global phase of a Pauli string, stored as a power of `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(power: u8) -> Phase {
        Phase(power % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn negate(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { phase: Phase::PLUS_ONE, letters: vec![Pauli::I; n] }
    }

    pub fn new(phase: Phase, letters: Vec<Pauli>) -> Self {
        PauliString { phase, letters }
    }

    /// `letter` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Self {
        let mut p = PauliString::identity(n);
        p.letters[qubit] = letter;
        p
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        self.letters[qubit]
    }

    pub fn set_letter(&mut self, qubit: usize, letter: Pauli) {
        self.letters[qubit] = letter;
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn is_identity_letters(&self) -> bool {
        self.letters.iter().all(|&l| l == Pauli::I)
    }

    /// `Some(+1 / -1)` for Hermitian strings.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            Phase::PLUS_ONE => Some(1),
            Phase::MINUS_ONE => Some(-1),
            _ => None,
        }
    }

    pub fn negated(&self) -> PauliString {
        PauliString { phase: self.phase.negate(), letters: self.letters.clone() }
    }

    pub fn with_phase(&self, phase: Phase) -> PauliString {
        PauliString { phase, letters: self.letters.clone() }
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != Pauli::I).count()
    }

    /// Operator product `self * rhs`.
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.len() != rhs.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: rhs.len() });
        }
        let mut power = self.phase.0 + rhs.phase.0;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (e, l) = a.product(b);
                power += e;
                l
            })
            .collect();
        Ok(PauliString { phase: Phase::from_power(power), letters })
    }

    pub fn commutes_with(&self, rhs: &PauliString) -> Result<bool> {
        if self.len() != rhs.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: rhs.len() });
        }
        let anti = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .filter(|(a, b)| (a.x() & b.z()) ^ (a.z() & b.x()))
            .count();
        Ok(anti % 2 == 0)
    }

    /// Places this string on qubits `offset..offset+len` of a `total`-qubit register.
    pub fn embed(&self, total: usize, offset: usize) -> Result<PauliString> {
        if offset + self.len() > total {
            return Err(Error::LengthMismatch { expected: total, actual: offset + self.len() });
        }
        let mut letters = vec![Pauli::I; total];
        letters[offset..offset + self.len()].copy_from_slice(&self.letters);
        Ok(PauliString { phase: self.phase, letters })
    }

    /// Bit masks for dense simulation; qubit 0 is the most significant bit.
    pub fn masks(&self) -> (usize, usize) {
        let n = self.len();
        let mut x = 0usize;
        let mut z = 0usize;
        for (q, l) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if l.x() {
                x |= bit;
            }
            if l.z() {
                z |= bit;
            }
        }
        (x, z)
    }

    /// Coefficient `c` with `P|b> = c |b xor x_mask>`.
    pub(crate) fn action_coefficient(&self, basis: usize, z_mask: usize, y_count: u32) -> Complex64 {
        let minus = (basis & z_mask).count_ones() % 2 == 1;
        let power = (self.phase.0 as u32 + y_count + if minus { 2 } else { 0 }) % 4;
        Phase::from_power(power as u8).to_complex()
    }

    pub(crate) fn y_count(&self) -> u32 {
        self.letters.iter().filter(|&&l| l == Pauli::Y).count() as u32
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for l in &self.letters {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (phase, rest) = if let Some(r) = t.strip_prefix("+i").or_else(|| t.strip_prefix("i")) {
            (Phase::PLUS_I, r)
        } else if let Some(r) = t.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else {
            (Phase::PLUS_ONE, t.strip_prefix('+').unwrap_or(t))
        };
        let letters = rest
            .chars()
            .filter(|c| !matches!(c, '⊗' | '*' | ' ' | '_'))
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::PauliParse(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::PauliParse(s.to_string()));
        }
        Ok(PauliString { phase, letters })
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Graph-state stabilizer generator: X on `vertex`, Z on each neighbour.
pub fn graph_stabilizer_generator(g: &Graph, vertex: usize) -> Result<PauliString> {
    let neighbors = g.neighbors(vertex)?;
    let mut p = PauliString::single(g.n(), vertex, Pauli::X);
    for &w in neighbors {
        p.letters[w] = Pauli::Z;
    }
    Ok(p)
}

/// Product of the generators indexed by `subset`, taken in the given order.
pub fn stabilizer_element(g: &Graph, subset: &[usize]) -> Result<PauliString> {
    subset.iter().try_fold(PauliString::identity(g.n()), |acc, &v| {
        acc.multiply(&graph_stabilizer_generator(g, v)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_relations() {
        assert_eq!(p("+X").multiply(&p("+Z")).unwrap(), p("-iY"));
        assert_eq!(p("+Z").multiply(&p("+X")).unwrap(), p("+iY"));
        assert_eq!(p("+X").multiply(&p("+Y")).unwrap(), p("+iZ"));
        assert_eq!(p("+Y").multiply(&p("+Z")).unwrap(), p("+iX"));
        assert_eq!(p("+XZ").multiply(&p("+ZX")).unwrap(), p("+YY"));
        for s in ["+X", "-Y", "+Z", "-XYZ", "+IYZX"] {
            let a = p(s);
            assert_eq!(a.multiply(&a).unwrap(), PauliString::identity(a.len()));
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            p("+XX").multiply(&p("+X")),
            Err(Error::LengthMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn generators() {
        let edge = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(graph_stabilizer_generator(&edge, 0).unwrap(), p("+XZ"));
        assert_eq!(graph_stabilizer_generator(&Graph::empty(1).unwrap(), 0).unwrap(), p("+X"));
        assert_eq!(graph_stabilizer_generator(&Graph::path(3).unwrap(), 1).unwrap(), p("+ZXZ"));
        assert!(graph_stabilizer_generator(&edge, 2).is_err());
        assert_eq!(stabilizer_element(&edge, &[0, 1]).unwrap(), p("+YY"));
        assert_eq!(stabilizer_element(&edge, &[]).unwrap(), p("+II"));
    }

    #[test]
    fn parse_and_display() {
        for s in ["+XYZI", "-Z", "+iX", "-iYY"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("X⊗Z"), p("+XZ"));
        assert!("+XQ".parse::<PauliString>().is_err());
        assert!("+".parse::<PauliString>().is_err());
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (0u8..4, proptest::collection::vec(0u8..4, n)).prop_map(|(ph, ls)| {
            PauliString::new(
                Phase::from_power(ph),
                ls.into_iter().map(|b| Pauli::from_bits(b & 1 == 1, b & 2 == 2)).collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(
            (a, b, c) in (1usize..5).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n), arb_pauli(n)))
        ) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn commutation_matches_product_order(
            (a, b) in (1usize..5).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))
        ) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            if a.commutes_with(&b).unwrap() {
                prop_assert_eq!(ab, ba);
            } else {
                prop_assert_eq!(ab, ba.negated());
            }
        }

        #[test]
        fn generator_products_are_hermitian(
            (n, mask, seed) in (1usize..6, any::<u32>(), any::<u64>())
        ) {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let edges = pairs.iter().enumerate().filter(|(b, _)| seed >> b & 1 == 1).map(|(_, e)| *e);
            let g = Graph::new(n, edges).unwrap();
            let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let s = stabilizer_element(&g, &subset).unwrap();
            prop_assert!(s.is_hermitian());
        }
    }
}
