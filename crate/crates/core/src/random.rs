//! Seeded randomness: PRNG substreams, Box–Muller normals, random Hermitian
//! matrices and Ginibre/Gram–Schmidt unitaries.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::qmath::{CMatrix, HermitianMatrix, C64, ZERO};

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the generator seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> LabRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Seed for a sub-task, derived from `base` and a tuple of indices.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard normal draw via Box–Muller.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(standard_normal(rng), standard_normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Hermitian matrix (G + G†)/2 with complex Gaussian G.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let g = CMatrix::from_fn(n, |_, _| complex_normal(rng));
    g.symmetrize()
}

/// Unitary from Gram–Schmidt on a Ginibre matrix. Each column's first
/// non-negligible entry is rotated to be real and positive.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(n, |_, _| complex_normal(rng));
        if let Some(u) = gram_schmidt(&g) {
            return u;
        }
    }
}

fn gram_schmidt(g: &CMatrix) -> Option<CMatrix> {
    let n = g.dim();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // modified Gram–Schmidt, two passes for orthogonality at rounding level
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return None;
        }
        let lead = v.iter().find(|z| z.norm() > 1e-12 * norm).copied().unwrap_or(ZERO);
        let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { C64::new(1.0, 0.0) };
        for vi in v.iter_mut() {
            *vi = *vi * phase / norm;
        }
        cols.push(v);
    }
    Some(CMatrix::from_fn(n, |i, j| cols[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary_and_deterministic() {
        let u = random_unitary(&mut rng(42), 8);
        let uu = u.adjoint().matmul(&u);
        assert!(uu.max_abs_diff(&CMatrix::identity(8)) < 1e-12);
        let v = random_unitary(&mut rng(42), 8);
        assert_eq!(u, v);
        for j in 0..8 {
            let z = u[(0, j)];
            assert!(z.im.abs() < 1e-15 && z.re > 0.0);
        }
    }

    #[test]
    fn substreams_differ() {
        let a: u64 = substream(1, 0).random();
        let b: u64 = substream(1, 1).random();
        assert_ne!(a, b);
        let c: u64 = substream(1, 1).random();
        assert_eq!(b, c);
    }

    #[test]
    fn mixed_seeds_depend_on_every_part() {
        assert_ne!(mix_seed(1, &[2, 3]), mix_seed(1, &[3, 2]));
        assert_ne!(mix_seed(1, &[2]), mix_seed(2, &[2]));
        assert_eq!(mix_seed(5, &[7, 8]), mix_seed(5, &[7, 8]));
    }

    #[test]
    fn normal_moments() {
        let mut r = rng(9);
        let xs: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut r)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01);
    }
}
