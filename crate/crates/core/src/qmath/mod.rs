//! Dense complex linear algebra for Hermitian matrices and density matrices.
//!
//! Everything here is small and dense: dimensions are capped at
//! [`Tolerances::dim_cap`](crate::tolerances::Tolerances) and matrices are
//! stored row-major in a flat `Vec`.

mod eigh;
mod norms;

use std::fmt;
use std::ops::{Index, IndexMut};

pub use num_complex::Complex64 as C64;

pub use eigh::{eigh, eigh_with, eigvalsh, Eigh};
pub use norms::{
    dual_order, holder_extremizer, psd_sqrt_eigenvalues, schatten_norm, schatten_norm_of_eigs,
    SchattenOrder,
};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, checking length and finiteness.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
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

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max_{i,j} |M_ij - conj(M_ji)|
    pub fn max_hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2. The only sanctioned way to turn an almost-Hermitian
    /// matrix into a [`HermitianMatrix`].
    pub fn symmetrize(&self) -> HermitianMatrix {
        let n = self.dim;
        let m = Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()) * 0.5
            }
        });
        HermitianMatrix(m)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Tr(A·B) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.dim, b.dim);
    let n = a.dim;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    acc
}

/// Kronecker product A ⊗ B, refusing to build anything larger than `cap`.
pub fn kron_capped(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let dim = a.dim * b.dim;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let nb = b.dim;
    Ok(CMatrix::from_fn(dim, |i, j| {
        a[(i / nb, j / nb)] * b[(i % nb, j % nb)]
    }))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_capped(a, b, Tolerances::default().dim_cap)
}

/// Hermitian matrix within [`Tolerances::hermiticity`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Hermitian matrix"));
        }
        let dev = m.max_hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        Ok(Self(m))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(diag))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn add(&self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(self.0.add(&rhs.0))
    }

    pub fn sub(&self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(self.0.sub(&rhs.0))
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(s))
    }

    /// U·M·U† for a unitary (or any) U; the result is re-symmetrized to
    /// wipe rounding asymmetry.
    pub fn conjugate_by(&self, u: &CMatrix) -> HermitianMatrix {
        u.matmul(&self.0).matmul(&u.adjoint()).symmetrize()
    }

    pub fn trace_real(&self) -> f64 {
        self.0.trace().re
    }

    /// Re Tr(self · other); the imaginary part vanishes for Hermitian pairs.
    pub fn trace_product_real(&self, other: &HermitianMatrix) -> f64 {
        trace_product(&self.0, &other.0).re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Σ c_k·M_k for Hermitian M_k and real c_k.
    pub fn linear_combination(terms: &[(f64, &HermitianMatrix)]) -> HermitianMatrix {
        let dim = terms.first().map(|(_, m)| m.dim()).unwrap_or(0);
        let mut acc = CMatrix::zeros(dim);
        for (c, m) in terms {
            for (a, b) in acc.data.iter_mut().zip(&m.0.data) {
                *a += b * *c;
            }
        }
        HermitianMatrix(acc)
    }
}

/// Unit-trace, positive semi-definite Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    /// |ψ⟩⟨ψ| for a unit vector ψ.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        validate_density(CMatrix::outer(psi), Tolerances::default().trace)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix(CMatrix::identity(dim).scale(1.0 / dim as f64)))
    }

    pub(crate) fn from_hermitian_unchecked(h: HermitianMatrix) -> Self {
        Self(h)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0 .0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvalsh(&self.0)?[0])
    }

    /// Largest eigenvalue; 1 for a pure state.
    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*eigvalsh(&self.0)?.last().expect("non-empty"))
    }
}

/// Checks all three density-matrix invariants (Hermitian, unit trace, PSD)
/// within `tol` and names the first one that fails.
pub fn validate_density(m: CMatrix, tol: f64) -> Result<DensityMatrix> {
    if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("density matrix"));
    }
    let dev = m.max_hermitian_deviation();
    if dev > tol {
        return Err(Error::HermiticityViolation { magnitude: dev });
    }
    let tr = m.trace();
    let trace_dev = (tr - ONE).norm();
    if trace_dev > tol {
        return Err(Error::TraceViolation {
            magnitude: trace_dev,
        });
    }
    // Keep the caller's entries; only the eigen-check runs on the symmetrized copy.
    let sym = m.symmetrize();
    let min_eig = eigvalsh(&sym)?[0];
    if min_eig < -tol {
        return Err(Error::PsdViolation {
            magnitude: -min_eig,
        });
    }
    Ok(DensityMatrix(sym))
}
