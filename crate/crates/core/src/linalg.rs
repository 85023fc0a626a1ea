//! Small dense complex vectors and matrices — everything the protocol
//! states live in. Problems here never exceed d² ≤ 256 dimensions, so the
//! representations stay plain and dense.

use crate::{Error, Result};
use num_complex::Complex64;

/// A finite-dimensional complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl CVector {
    pub fn new(components: Vec<Complex64>) -> Self {
        debug_assert!(!components.is_empty());
        debug_assert!(components.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        CVector { data: components }
    }

    pub fn zeros(dim: usize) -> Self {
        CVector { data: vec![Complex64::ZERO; dim] }
    }

    /// The reference (computational) basis vector |k⟩.
    ///
    /// # Panics
    /// Panics if `k >= dim`.
    pub fn standard_basis(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut v = Self::zeros(dim);
        v.data[k] = Complex64::ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn components(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, z: Complex64) -> CVector {
        CVector { data: self.data.iter().map(|c| c * z).collect() }
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        self.same_dim(other)?;
        Ok(CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector> {
        self.same_dim(other)?;
        Ok(CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn same_dim(&self, other: &CVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }
}

/// ⟨u|v⟩ with conjugation on the left argument.
pub fn inner(u: &CVector, v: &CVector) -> Result<Complex64> {
    u.same_dim(v)?;
    Ok(u.data
        .iter()
        .zip(&v.data)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Kronecker product; component `a·dim(v) + b` is `u_a · v_b`.
pub fn tensor(u: &CVector, v: &CVector) -> CVector {
    let mut data = Vec::with_capacity(u.dim() * v.dim());
    for a in &u.data {
        for b in &v.data {
            data.push(a * b);
        }
    }
    CVector { data }
}

/// Componentwise complex conjugation — the reference-basis antiunitary.
pub fn conj_reference(v: &CVector) -> CVector {
    CVector { data: v.data.iter().map(|z| z.conj()).collect() }
}

/// A dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        CMatrix { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, Complex64::ONE);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, z: Complex64) {
        self.data[r * self.cols + c] = z;
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch { left: self.cols, right: other.rows });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    let cur = out.get(r, c);
                    out.set(r, c, cur + a * other.get(k, c));
                }
            }
        }
        Ok(out)
    }
}

/// G_{ij} = ⟨v_i|v_j⟩.
pub fn gram(vs: &[CVector]) -> Result<CMatrix> {
    assert!(!vs.is_empty());
    let mut g = CMatrix::zeros(vs.len(), vs.len());
    for (i, u) in vs.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            g.set(i, j, inner(u, v)?);
        }
    }
    Ok(g)
}

/// Max entrywise modulus of M − 1. Used on Gram matrices of sets that
/// should be orthonormal.
pub fn identity_deviation(m: &CMatrix) -> Result<f64> {
    if m.rows != m.cols {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    let mut worst = 0.0f64;
    for r in 0..m.rows {
        for c in 0..m.cols {
            let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((m.get(r, c) - expected).norm());
        }
    }
    Ok(worst)
}

/// Max entrywise modulus of M†M − 1.
pub fn max_deviation_from_identity(m: &CMatrix) -> Result<f64> {
    if m.rows != m.cols {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    identity_deviation(&m.dagger().mul(m)?)
}

/// True iff both M†M and MM† are within `tol` of the identity.
pub fn is_unitary(m: &CMatrix, tol: f64) -> Result<bool> {
    let left = max_deviation_from_identity(m)?;
    let right = identity_deviation(&m.mul(&m.dagger())?)?;
    Ok(left <= tol && right <= tol)
}

/// Numerical rank of the set's Gram matrix: pivot count under diagonally
/// pivoted elimination with threshold `tol`. The Gram matrix is Hermitian
/// positive semidefinite, so the largest remaining diagonal entry is always
/// an admissible pivot.
pub fn rank(vs: &[CVector], tol: f64) -> Result<usize> {
    if vs.is_empty() {
        return Ok(0);
    }
    let k = vs.len();
    let g = gram(vs)?;
    let mut a: Vec<Complex64> = (0..k * k).map(|ix| g.get(ix / k, ix % k)).collect();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut rank = 0;
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| {
                a[i * k + i].re.total_cmp(&a[j * k + j].re)
            })
            .expect("remaining is non-empty");
        let piv = remaining.swap_remove(pos);
        let pivot = a[piv * k + piv].re;
        if pivot <= tol {
            break;
        }
        rank += 1;
        for &i in &remaining {
            for &j in &remaining {
                let update = a[i * k + piv] * a[piv * k + j] / pivot;
                a[i * k + j] -= update;
            }
        }
    }
    Ok(rank)
}
