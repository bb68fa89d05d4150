//! Gate-level simulator over state vectors and density matrices.
//!
//! Qubit 0 is the most significant bit of a basis index, i.e. the leftmost
//! factor of a Kronecker product.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::Result;
use crate::qmath::{validate_density, CMatrix, DensityMatrix, C64, ONE, ZERO};

/// 2×2 unitary, row-major.
pub type Gate = [[C64; 2]; 2];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// e^{−iθY/2}
pub fn ry(theta: f64) -> Gate {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

/// e^{−iθZ/2}
pub fn rz(theta: f64) -> Gate {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, -s), ZERO], [ZERO, c(co, s)]]
}

pub fn matmul2(a: &Gate, b: &Gate) -> Gate {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Rot(α, β, γ) = RZ(α)·RY(β)·RZ(γ).
pub fn rot(alpha: f64, beta: f64, gamma: f64) -> Gate {
    matmul2(&rz(alpha), &matmul2(&ry(beta), &rz(gamma)))
}

pub fn hadamard() -> Gate {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn gate_matrix(g: &Gate) -> CMatrix {
    CMatrix::from_fn(2, |i, j| g[i][j])
}

/// Pure or mixed register state.
#[derive(Clone, Debug, PartialEq)]
pub enum QState {
    Pure(Vec<C64>),
    Mixed(CMatrix),
}

impl QState {
    pub fn zero(n_qubits: usize) -> Self {
        let mut v = vec![ZERO; 1 << n_qubits];
        v[0] = ONE;
        QState::Pure(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            QState::Pure(v) => v.len(),
            QState::Mixed(m) => m.dim(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn apply(&mut self, qubit: usize, g: &Gate) {
        let n = self.n_qubits();
        match self {
            QState::Pure(v) => apply_1q_vec(v, n, qubit, g),
            QState::Mixed(m) => apply_1q_density(m, n, qubit, g),
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let n = self.n_qubits();
        match self {
            QState::Pure(v) => cnot_vec(v, n, control, target),
            QState::Mixed(m) => cnot_density(m, n, control, target),
        }
    }

    /// Arbitrary unitary on the full register.
    pub fn apply_unitary(&mut self, u: &CMatrix) {
        match self {
            QState::Pure(v) => *v = u.matvec(v),
            QState::Mixed(m) => *m = u.matmul(m).matmul(&u.adjoint()),
        }
    }

    /// Computational-basis populations.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QState::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            QState::Mixed(m) => (0..m.dim()).map(|i| m[(i, i)].re).collect(),
        }
    }

    /// ⟨M⟩ for an observable diagonal in the computational basis.
    pub fn expectation_diagonal(&self, diag: &[f64]) -> f64 {
        self.probabilities().iter().zip(diag).map(|(p, d)| p * d).sum()
    }

    pub fn density_matrix(&self) -> CMatrix {
        match self {
            QState::Pure(v) => CMatrix::outer(v),
            QState::Mixed(m) => m.clone(),
        }
    }

    pub(crate) fn into_density_unchecked(self) -> DensityMatrix {
        let m = match self {
            QState::Pure(v) => CMatrix::outer(&v),
            QState::Mixed(m) => m,
        };
        DensityMatrix::from_hermitian_unchecked(m.symmetrize())
    }

    pub fn to_density(&self, tol: f64) -> Result<DensityMatrix> {
        validate_density(self.density_matrix(), tol)
    }
}

fn stride(n: usize, qubit: usize) -> usize {
    assert!(qubit < n, "qubit {qubit} out of range for {n} qubits");
    1 << (n - 1 - qubit)
}

pub fn apply_1q_vec(v: &mut [C64], n: usize, qubit: usize, g: &Gate) {
    let s = stride(n, qubit);
    let dim = v.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + s {
            let a = v[i];
            let b = v[i + s];
            v[i] = g[0][0] * a + g[0][1] * b;
            v[i + s] = g[1][0] * a + g[1][1] * b;
        }
        base += 2 * s;
    }
}

/// ρ ← G ρ G† with G acting on one qubit.
pub fn apply_1q_density(m: &mut CMatrix, n: usize, qubit: usize, g: &Gate) {
    let s = stride(n, qubit);
    let dim = m.dim();
    let data = m.data_mut();
    // rows: G·ρ
    let mut base = 0;
    while base < dim {
        for i in base..base + s {
            let (r0, r1) = (i * dim, (i + s) * dim);
            for j in 0..dim {
                let a = data[r0 + j];
                let b = data[r1 + j];
                data[r0 + j] = g[0][0] * a + g[0][1] * b;
                data[r1 + j] = g[1][0] * a + g[1][1] * b;
            }
        }
        base += 2 * s;
    }
    // columns: (·)·G†, i.e. each row transformed by conj(G)
    let h = [[g[0][0].conj(), g[0][1].conj()], [g[1][0].conj(), g[1][1].conj()]];
    for row in data.chunks_mut(dim) {
        apply_1q_vec(row, n, qubit, &h);
    }
}

fn cnot_pairs(n: usize, control: usize, target: usize) -> impl Iterator<Item = (usize, usize)> {
    let cs = stride(n, control);
    let ts = stride(n, target);
    (0..1usize << n).filter(move |i| i & cs != 0 && i & ts == 0).map(move |i| (i, i | ts))
}

pub fn cnot_vec(v: &mut [C64], n: usize, control: usize, target: usize) {
    for (a, b) in cnot_pairs(n, control, target) {
        v.swap(a, b);
    }
}

pub fn cnot_density(m: &mut CMatrix, n: usize, control: usize, target: usize) {
    let dim = m.dim();
    let pairs: Vec<(usize, usize)> = cnot_pairs(n, control, target).collect();
    let data = m.data_mut();
    for &(a, b) in &pairs {
        for j in 0..dim {
            data.swap(a * dim + j, b * dim + j);
        }
    }
    for row in data.chunks_mut(dim) {
        for &(a, b) in &pairs {
            row.swap(a, b);
        }
    }
}

/// Diagonal of Σ_q Z_q (or of Z on a single qubit) in the computational basis.
pub fn z_diagonal(n: usize, qubits: &[usize]) -> Vec<f64> {
    (0..1usize << n)
        .map(|i| {
            qubits
                .iter()
                .map(|&q| if i & stride(n, q) == 0 { 1.0 } else { -1.0 })
                .sum()
        })
        .collect()
}
