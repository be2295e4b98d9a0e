//! Superoperators on vectorized N×N density matrices.
//!
//! Basis order: populations (n,n) first, then for every pair n > m the coherences (n,m), (m,n).
//! For a qubit this is (ρ₁₁, ρ₂₂, ρ₂₁, ρ₁₂). Index 1 in the physics notation is index 0 here.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Fixed (row, col) enumeration of the vectorized density matrix.
pub fn basis_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (0..n).map(|k| (k, k)).collect();
    for a in 0..n {
        for b in 0..a {
            v.push((a, b));
            v.push((b, a));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMat,
    index: Vec<usize>,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        let pairs = basis_pairs(dim);
        let mut index = vec![0; dim * dim];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            index[a * dim + b] = k;
        }
        Self {
            dim,
            matrix: CMat::zeros(dim * dim, dim * dim),
            index,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.matrix.fill_with_identity();
        s
    }

    pub fn from_matrix(dim: usize, matrix: CMat) -> Self {
        assert_eq!(matrix.nrows(), dim * dim);
        let mut s = Self::zeros(dim);
        s.matrix = matrix;
        s
    }

    /// Position of ρ_{ab} in the vectorized basis.
    pub fn idx(&self, a: usize, b: usize) -> usize {
        self.index[a * self.dim + b]
    }

    /// Element Φ_{ab,ij}.
    pub fn get(&self, a: usize, b: usize, i: usize, j: usize) -> Complex64 {
        self.matrix[(self.idx(a, b), self.idx(i, j))]
    }

    pub fn set(&mut self, a: usize, b: usize, i: usize, j: usize, v: Complex64) {
        let (r, c) = (self.idx(a, b), self.idx(i, j));
        self.matrix[(r, c)] = v;
    }

    pub fn add(&mut self, a: usize, b: usize, i: usize, j: usize, v: Complex64) {
        let (r, c) = (self.idx(a, b), self.idx(i, j));
        self.matrix[(r, c)] += v;
    }

    /// −i[H, ·].
    pub fn commutator(h: &CMat) -> Self {
        let n = h.nrows();
        let mut s = Self::zeros(n);
        let mi = Complex64::new(0.0, -1.0);
        for a in 0..n {
            for b in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = ZERO;
                        if b == j {
                            v += h[(a, i)];
                        }
                        if a == i {
                            v -= h[(j, b)];
                        }
                        if v != ZERO {
                            s.set(a, b, i, j, mi * v);
                        }
                    }
                }
            }
        }
        s
    }

    pub fn vectorize(&self, rho: &CMat) -> nalgebra::DVector<Complex64> {
        let pairs = basis_pairs(self.dim);
        nalgebra::DVector::from_iterator(pairs.len(), pairs.iter().map(|&(a, b)| rho[(a, b)]))
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = &self.matrix * self.vectorize(rho);
        let mut out = CMat::zeros(self.dim, self.dim);
        for (k, &(a, b)) in basis_pairs(self.dim).iter().enumerate() {
            out[(a, b)] = v[k];
        }
        out
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::from_matrix(self.dim, &self.matrix * &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_matrix(self.dim, &self.matrix - &other.matrix)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::from_matrix(self.dim, &self.matrix * k)
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    /// e^{self·t} by scaling and squaring.
    pub fn exp_scaled(&self, t: f64) -> Self {
        let m = &self.matrix * Complex64::new(t, 0.0);
        Self::from_matrix(self.dim, m.exp())
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn try_inverse(&self) -> Option<Self> {
        self.matrix.clone().try_inverse().map(|m| Self::from_matrix(self.dim, m))
    }

    /// max_{ij} |Σ_n M_{nn,ij} − target|; target is 0 for generators, 1 for maps.
    pub fn trace_defect(&self, target: f64) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.get(k, k, i, j);
                }
                let want = if i == j { target } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }

    /// max |M_{nm,ij} − conj(M_{mn,ji})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        worst = worst.max((self.get(a, b, i, j) - self.get(b, a, j, i).conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest |entry| coupling populations with coherences.
    pub fn population_coherence_coupling(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n * n {
            for c in 0..n * n {
                if (r < n) != (c < n) {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Complex matrix from row-major entries.
pub fn cmat(n: usize, m: usize, entries: &[Complex64]) -> CMat {
    CMat::from_row_slice(n, m, entries)
}

pub fn diag(v: &[f64]) -> CMat {
    let mut m = CMat::zeros(v.len(), v.len());
    for (k, x) in v.iter().enumerate() {
        m[(k, k)] = Complex64::new(*x, 0.0);
    }
    m
}

pub fn one() -> Complex64 {
    ONE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_ordering() {
        assert_eq!(basis_pairs(2), vec![(0, 0), (1, 1), (1, 0), (0, 1)]);
    }

    #[test]
    fn commutator_rotates_coherences() {
        // H = (Δ/2)σ_z with state 1 (index 0) on top.
        let h = diag(&[0.5, -0.5]);
        let l = Superoperator::commutator(&h);
        assert!((l.get(1, 0, 1, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((l.get(0, 1, 0, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(l.trace_defect(0.0) < 1e-15);
        assert!(l.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn apply_matches_matrix_product() {
        let h = cmat(2, 2, &[ONE, Complex64::new(0.3, 0.2), Complex64::new(0.3, -0.2), -ONE]);
        let rho = cmat(2, 2, &[Complex64::new(0.6, 0.0), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), Complex64::new(0.4, 0.0)]);
        let got = Superoperator::commutator(&h).apply(&rho);
        let want = (&h * &rho - &rho * &h) * Complex64::new(0.0, -1.0);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn exponential_semigroup() {
        let h = diag(&[0.5, -0.5]);
        let l = Superoperator::commutator(&h);
        let a = l.exp_scaled(0.7).compose(&l.exp_scaled(1.1));
        assert!((a.matrix - l.exp_scaled(1.8).matrix).norm() < 1e-13);
    }
}
