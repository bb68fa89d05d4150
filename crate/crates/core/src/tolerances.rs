//! Numerical tolerances and size caps shared by every module.
//!
//! Functions that need a tolerance take it from [`Tolerances::default`]
//! unless the caller passes an explicit record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Max |M_ij - conj(M_ji)| accepted as Hermitian.
    pub hermiticity: f64,
    /// Max |Tr(rho) - 1| accepted for a density matrix.
    pub trace: f64,
    /// Most negative eigenvalue accepted for a density matrix.
    pub psd: f64,
    /// Jacobi stops once the off-diagonal Frobenius mass falls below this
    /// fraction of the Frobenius norm.
    pub jacobi_relative: f64,
    pub jacobi_max_sweeps: usize,
    /// Below this Frobenius norm a matrix counts as zero.
    pub zero_norm: f64,
    /// Negative eigenvalues of a PSD input within this margin are clamped to 0.
    pub psd_clamp: f64,
    /// Largest Hilbert-space dimension any operation may build.
    pub dim_cap: usize,
    /// Largest qubit count an embedding may use.
    pub qubit_cap: usize,
    /// Rank-1 tolerance for pure-state checks.
    pub purity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-10,
            psd: 1e-10,
            jacobi_relative: 1e-14,
            jacobi_max_sweeps: 60,
            zero_norm: 1e-14,
            psd_clamp: 1e-10,
            dim_cap: 1024,
            qubit_cap: 10,
            purity: 1e-8,
        }
    }
}
