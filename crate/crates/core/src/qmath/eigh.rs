//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the pivot is driven to
//! zero exactly. Sweeps run in fixed (p, q) order, which makes the result a
//! deterministic function of the input.

use super::{CMatrix, HermitianMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// Eigenvalues in ascending order with eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    /// V·diag(f(λ))·V†
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        self.map_spectrum_indexed(|k| f(self.values[k]))
    }

    /// V·diag(w_k)·V† with weights chosen per eigen-index.
    pub fn map_spectrum_indexed(&self, w: impl Fn(usize) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = (0..n).map(w).collect();
        let v = &self.vectors;
        let m = CMatrix::from_fn(n, |i, j| {
            let mut acc = ZERO;
            for k in 0..n {
                if fl[k] != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * fl[k];
                }
            }
            acc
        });
        m.symmetrize()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_spectrum(|l| l)
    }
}

pub fn eigh(m: &HermitianMatrix) -> Result<Eigh> {
    eigh_with(m, &Tolerances::default())
}

pub fn eigh_with(m: &HermitianMatrix, tol: &Tolerances) -> Result<Eigh> {
    let (values, vectors) = jacobi(m.as_matrix(), true, tol)?;
    Ok(Eigh {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Ascending eigenvalues only; skips the eigenvector accumulation.
pub fn eigvalsh(m: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(jacobi(m.as_matrix(), false, &Tolerances::default())?.0)
}

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(input: &CMatrix, want_vectors: bool, tol: &Tolerances) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = input.dim();
    let mut a = input.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = want_vectors.then(|| CMatrix::identity(n));
    let norm = a.frobenius_norm();
    let target = tol.jacobi_relative * norm;

    let mut sweeps = 0;
    let mut off = off_diagonal_mass(&a);
    while off > target && norm > 0.0 {
        if sweeps >= tol.jacobi_max_sweeps {
            // Accept a result that stalled at rounding level.
            if off <= 1e-12 * norm {
                break;
            }
            return Err(Error::NonConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, v.as_mut(), p, q, norm);
            }
        }
        sweeps += 1;
        off = off_diagonal_mass(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, |i, j| v[(i, order[j])]));
    Ok((values, vectors))
}

fn rotate(a: &mut CMatrix, v: Option<&mut CMatrix>, p: usize, q: usize, norm: f64) {
    let n = a.dim();
    let g = a[(p, q)];
    let g_abs = g.norm();
    if g_abs <= f64::MIN_POSITIVE || g_abs < 1e-300 * norm.max(1.0) {
        return;
    }
    let phase = g / g_abs; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g_abs);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = I except J_pp = c, J_pq = s, J_qp = -s·e^{-iφ}, J_qq = c·e^{-iφ}.
    let pc = phase.conj();
    let jqp = -pc * s;
    let jqq = pc * c;

    // A ← A·J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * s + akq * jqq;
    }
    // A ← J†·A
    let cjqp = jqp.conj();
    let cjqq = jqq.conj();
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * cjqp;
        a[(q, k)] = apk * s + aqk * cjqq;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * c + vkq * jqp;
            v[(k, q)] = vkp * s + vkq * jqq;
        }
    }
}
