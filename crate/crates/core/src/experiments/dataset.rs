//! Two-class Gaussian task with identity covariance.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::LabeledSample;
use crate::random::{rng, standard_normal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianTaskSpec {
    pub d: usize,
    pub train_m: usize,
    pub test_m: usize,
    pub seed: u64,
}

impl Default for GaussianTaskSpec {
    fn default() -> Self {
        Self {
            d: 2,
            train_m: 20,
            test_m: 1000,
            seed: 0,
        }
    }
}

/// μ₀ = (π/4)·1; μ₁ = (π/4)·(1_{⌊d/2⌋} ⊕ −1_{d−⌊d/2⌋}).
pub fn class_mean(d: usize, y: usize) -> Vec<f64> {
    (0..d).map(|i| if y == 1 && i >= d / 2 { -FRAC_PI_4 } else { FRAC_PI_4 }).collect()
}

fn draw<R: Rng + ?Sized>(r: &mut R, means: &[Vec<f64>; 2]) -> LabeledSample {
    let y = usize::from(r.random::<bool>());
    let x = means[y].iter().map(|mu| mu + standard_normal(r)).collect();
    LabeledSample { x, y }
}

/// Train then test samples from one seeded stream.
pub fn gen_dataset(spec: &GaussianTaskSpec) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    let mut r = rng(spec.seed);
    let means = [class_mean(spec.d, 0), class_mean(spec.d, 1)];
    let train = (0..spec.train_m).map(|_| draw(&mut r, &means)).collect();
    let test = (0..spec.test_m).map(|_| draw(&mut r, &means)).collect();
    (train, test)
}
