//! Monte-Carlo estimates of the empirical Rademacher complexities.
//!
//! Draw i uses the PRNG substream (seed, i), so results do not depend on how
//! draws are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StateSet;
use crate::error::{Error, Result};
use crate::model::signed_label;
use crate::qmath::{schatten_norm_of_eigs, SchattenOrder};
use crate::random::{standard_normal, substream, LabRng};
use crate::stats::mean_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_draws: usize,
}

fn rademacher(rng: &mut LabRng, m: usize) -> Vec<f64> {
    (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn signed_labels(labels: &[usize], m: usize) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Ok(vec![1.0; m]);
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: labels.len() });
    }
    Ok(labels.iter().map(|&y| signed_label(y)).collect())
}

fn summarize(values: Vec<f64>) -> McEstimate {
    let (mean, stderr) = mean_stderr(&values);
    McEstimate {
        mean,
        stderr,
        n_draws: values.len(),
    }
}

/// (b/m)·‖Σᵢ σᵢyᵢρᵢ‖_{r*} averaged over Rademacher draws. An empty label
/// slice means all labels +1, which has the same distribution.
pub fn mc_rc_estimate(states: &StateSet, labels: &[usize], r: SchattenOrder, b: f64, n_draws: usize, seed: u64) -> Result<McEstimate> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter("n_draws must be at least 1".into()));
    }
    let m = states.len();
    let ys = signed_labels(labels, m)?;
    let dual = r.dual();
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let w: Vec<f64> = rademacher(&mut rng, m).iter().zip(&ys).map(|(s, y)| s * y).collect();
            Ok(b / m as f64 * schatten_norm_of_eigs(&states.weighted_sum_eigs(&w)?, dual))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(values))
}

/// Exact empirical RC by enumerating all 2^m sign vectors.
pub fn mc_rc_exact(states: &StateSet, r: SchattenOrder, b: f64) -> Result<f64> {
    let m = states.len();
    if m > 24 {
        return Err(Error::InvalidParameter(format!("exact enumeration needs m <= 24, got {m}")));
    }
    let dual = r.dual();
    let mut total = Vec::with_capacity(1 << m);
    for mask in 0u64..(1 << m) {
        let w: Vec<f64> = (0..m).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        total.push(schatten_norm_of_eigs(&states.weighted_sum_eigs(&w)?, dual));
    }
    Ok(b / m as f64 * crate::stats::neumaier_sum(total) / (1u64 << m) as f64)
}

/// Inputs of one single-qubit ARC draw: maximize c₀a₀ + c·a − κ‖a‖ over
/// a₀² + ‖a‖² ≤ R².
#[derive(Debug, Clone, Copy)]
pub struct SmallArcProblem {
    pub c0: f64,
    pub c: [f64; 3],
    pub kappa: f64,
    pub radius: f64,
}

impl SmallArcProblem {
    pub fn objective(&self, x: &[f64; 4]) -> f64 {
        let a = [x[1], x[2], x[3]];
        self.c0 * x[0] + dot(&self.c, &a) - self.kappa * norm3(&a)
    }

    /// Projected (sub)gradient ascent from `restarts` random starts, then an
    /// exact solve of the two-dimensional problem along the best direction.
    pub fn solve(&self, rng: &mut LabRng, restarts: usize) -> f64 {
        let g_scale = (self.c0 * self.c0 + dot(&self.c, &self.c)).sqrt() + self.kappa.abs();
        if g_scale == 0.0 {
            return 0.0;
        }
        let step0 = self.radius / g_scale;
        let mut best = f64::NEG_INFINITY;
        let mut best_dir = [0.0; 3];
        for _ in 0..restarts {
            let mut x = self.random_point(rng);
            for t in 0..600 {
                let a = [x[1], x[2], x[3]];
                let na = norm3(&a);
                let mut g = [self.c0, self.c[0], self.c[1], self.c[2]];
                if na > 0.0 {
                    for k in 0..3 {
                        g[k + 1] -= self.kappa * a[k] / na;
                    }
                }
                let eta = step0 / (1.0 + t as f64 / 20.0);
                for k in 0..4 {
                    x[k] += eta * g[k];
                }
                self.project(&mut x);
                let v = self.objective(&x);
                if v > best {
                    best = v;
                    let a = [x[1], x[2], x[3]];
                    let na = norm3(&a);
                    if na > 0.0 {
                        best_dir = [a[0] / na, a[1] / na, a[2] / na];
                    }
                }
            }
        }
        // along a fixed unit direction u the problem is linear in (a₀, ‖a‖)
        let slope = dot(&self.c, &best_dir) - self.kappa;
        let polished = if slope > 0.0 {
            self.radius * (self.c0 * self.c0 + slope * slope).sqrt()
        } else {
            self.radius * self.c0.abs()
        };
        best.max(polished)
    }

    fn random_point(&self, rng: &mut LabRng) -> [f64; 4] {
        let mut x = [0.0; 4];
        for v in x.iter_mut() {
            *v = standard_normal(rng);
        }
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let rad = self.radius * rng.random::<f64>().powf(0.25);
        for v in x.iter_mut() {
            *v *= rad / n;
        }
        x
    }

    fn project(&self, x: &mut [f64; 4]) {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > self.radius {
            for v in x.iter_mut() {
                *v *= self.radius / n;
            }
        }
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Bloch vector of a single-qubit density matrix.
pub fn bloch_vector(rho: &crate::qmath::CMatrix) -> [f64; 3] {
    let off = rho[(0, 1)];
    [2.0 * off.re, -2.0 * off.im, rho[(0, 0)].re - rho[(1, 1)].re]
}

/// Draw-wise problems shared by the estimator and its tests.
pub fn small_arc_problems(states: &StateSet, labels: &[usize], b: f64, epsilon: f64, n_draws: usize, seed: u64) -> Result<Vec<SmallArcProblem>> {
    if states.hilbert_dim() != 2 {
        return Err(Error::InvalidParameter(format!("small ARC estimate needs d_H = 2, got {}", states.hilbert_dim())));
    }
    let bad = super::assumption_violations(states, epsilon)?;
    if !bad.is_empty() {
        return Err(Error::AssumptionViolation { indices: bad });
    }
    let m = states.len();
    let ys = signed_labels(labels, m)?;
    let bloch: Vec<[f64; 3]> = match states.matrices() {
        Some(ms) => ms.iter().map(bloch_vector).collect(),
        None => return Err(Error::AssumptionViolation { indices: (0..m).collect() }),
    };
    Ok((0..n_draws)
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let sigma = rademacher(&mut rng, m);
            let mut c0 = 0.0;
            let mut c = [0.0; 3];
            let mut ssum = 0.0;
            for k in 0..m {
                let w = sigma[k] * ys[k];
                c0 += w;
                for j in 0..3 {
                    c[j] += w * bloch[k][j];
                }
                ssum += sigma[k];
            }
            SmallArcProblem {
                c0,
                c,
                kappa: epsilon * std::f64::consts::SQRT_2 * ssum,
                radius: b / std::f64::consts::SQRT_2,
            }
        })
        .collect())
}

/// Empirical ARC at d_H = 2, r = p = 2 under the minimum-eigenvalue
/// assumption. The σ draws coincide with [`mc_rc_estimate`] for equal seeds.
pub fn mc_arc_estimate_small(states: &StateSet, labels: &[usize], b: f64, epsilon: f64, n_draws: usize, seed: u64) -> Result<McEstimate> {
    if n_draws == 0 {
        return Err(Error::InvalidParameter("n_draws must be at least 1".into()));
    }
    let m = states.len() as f64;
    let problems = small_arc_problems(states, labels, b, epsilon, n_draws, seed)?;
    let values: Vec<f64> = problems
        .par_iter()
        .enumerate()
        .map(|(i, pb)| {
            // restart stream disjoint from the σ streams
            let mut rng = substream(seed ^ 0x5eed_a5c0_0000_0000, i as u64);
            pb.solve(&mut rng, 20) / m
        })
        .collect();
    Ok(summarize(values))
}
