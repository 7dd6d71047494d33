//! Small dense complex matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square, row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::LengthMismatch { expected: dim * dim, actual: data.len() });
        }
        Ok(CMatrix { dim, data })
    }

    /// `|v><v|`
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, rhs: &CMatrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> Self {
        self.add(&rhs.scale(-1.0))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }

    /// `Tr(self * rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &CMatrix) -> C64 {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.data[i * d + j] * rhs.data[j * d + i];
            }
        }
        acc
    }

    pub fn kron(&self, rhs: &CMatrix) -> Self {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut out = CMatrix::zeros(d);
        for i in 0..da {
            for j in 0..da {
                let a = self.data[i * da + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        out.data[(i * db + k) * d + j * db + l] = a * rhs.data[k * db + l];
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Whether `self + shift * I` admits a Cholesky factorisation, i.e. all
    /// eigenvalues of a Hermitian `self` exceed `-shift`.
    pub fn is_positive_with_shift(&self, shift: f64) -> bool {
        let d = self.dim;
        let mut l = vec![ZERO; d * d];
        for j in 0..d {
            let mut diag = self.data[j * d + j].re + shift;
            for k in 0..j {
                diag -= l[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * d + j] = C64::new(ljj, 0.0);
            for i in j + 1..d {
                let mut s = self.data[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = s / ljj;
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let k = CMatrix::identity(2).kron(&CMatrix::identity(4));
        assert_eq!(k, CMatrix::identity(8));
    }

    #[test]
    fn kron_ordering_puts_left_factor_in_high_bits() {
        let mut a = CMatrix::zeros(2);
        a[(1, 0)] = ONE;
        let k = a.kron(&CMatrix::identity(2));
        assert_eq!(k[(2, 0)], ONE);
        assert_eq!(k[(3, 1)], ONE);
        assert_eq!(k[(1, 0)], ZERO);
    }

    #[test]
    fn positivity_check() {
        assert!(CMatrix::identity(3).is_positive_with_shift(0.0));
        let mut m = CMatrix::identity(2);
        m[(1, 1)] = C64::new(-1e-6, 0.0);
        assert!(!m.is_positive_with_shift(1e-9));
        assert!(m.is_positive_with_shift(1e-5));
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = CMatrix::from_vec(2, vec![ONE, C64::new(0.0, 2.0), C64::new(3.0, 0.0), ZERO]).unwrap();
        let b = a.adjoint();
        assert!((a.trace_product(&b) - a.matmul(&b).trace()).norm() < 1e-12);
    }
}
