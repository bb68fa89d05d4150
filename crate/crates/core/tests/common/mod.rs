//! Oracles shared by the integration tests. Spectra come from nalgebra so
//! that nothing here goes through the crate's own eigensolver.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qadvlab::qmath::{CMatrix, SchattenOrder};

pub fn to_nalgebra(m: &CMatrix) -> DMatrix<Complex64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

/// Eigenvalues of the Hermitian part of `m`.
pub fn oracle_eigs(m: &CMatrix) -> Vec<f64> {
    let a = to_nalgebra(m);
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

pub fn oracle_schatten(eigs: &[f64], r: SchattenOrder) -> f64 {
    match r {
        SchattenOrder::Infinity => eigs.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        SchattenOrder::Finite(x) => eigs.iter().map(|v| v.abs().powf(x)).sum::<f64>().powf(1.0 / x),
    }
}

/// ‖a − b‖_r through the oracle spectrum.
pub fn oracle_distance(a: &CMatrix, b: &CMatrix, r: SchattenOrder) -> f64 {
    oracle_schatten(&oracle_eigs(&a.sub(b)), r)
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    // no ties in the sweep axes; the classic rank-difference formula applies
    let rank = |v: &[f64]| -> Vec<f64> {
        (0..v.len()).map(|i| v.iter().filter(|w| **w < v[i]).count() as f64 + 1.0).collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Prints the one-line verdict, then fails the test on a miss.
pub fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:02} {}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {name}: {detail}");
}
