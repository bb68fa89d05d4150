//! Fast invariant checks run by `qadvlab selftest`.

use rand::Rng;

use crate::attacks::{quantum_fgsm_state, schatten_distance};
use crate::bounds::mc::{mc_rc_estimate, mc_rc_exact};
use crate::bounds::{pure, rc_bound_thm2, StateSet};
use crate::embeddings::{Embedding, EmbeddingSpec, Family};
use crate::error::Result;
use crate::experiments::dataset::{gen_dataset, GaussianTaskSpec};
use crate::model::{ClassifierModel, LabeledSample, Measurement};
use crate::qmath::{eigvalsh, schatten_norm, validate_density, SchattenOrder};
use crate::random::{random_hermitian, rng};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

const ORDERS: [SchattenOrder; 3] = [SchattenOrder::ONE, SchattenOrder::TWO, SchattenOrder::Infinity];

fn norms() -> Result<(bool, String)> {
    let mut r = rng(11);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let h = random_hermitian(&mut r, 2 + i % 7);
        let eigs = eigvalsh(&h)?;
        for ord in ORDERS {
            let brute = match ord {
                SchattenOrder::Infinity => eigs.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                o => eigs.iter().map(|v| v.abs().powf(o.value())).sum::<f64>().powf(o.reciprocal()),
            };
            worst = worst.max((schatten_norm(&h, ord)? - brute).abs() / brute.max(1.0));
        }
    }
    Ok((worst <= 1e-9, format!("max deviation {worst:.2e}")))
}

fn embeddings_valid() -> Result<(bool, String)> {
    let mut r = rng(12);
    let specs = [
        EmbeddingSpec::new(Family::Amplitude, 5),
        EmbeddingSpec::new(Family::Angle, 3),
        EmbeddingSpec::new(Family::Dense, 5),
        EmbeddingSpec::new(Family::LlayerAngle, 2).with_layers(3, 7),
        EmbeddingSpec::new(Family::Dense, 4).with_depolarizing(0.05),
    ];
    for spec in specs {
        let e = Embedding::new(spec.clone())?;
        for _ in 0..10 {
            let x: Vec<f64> = (0..spec.input_dim).map(|_| r.random_range(-3.0..3.0)).collect();
            validate_density(e.embed(&x)?.as_matrix().clone(), 1e-10)?;
        }
    }
    Ok((true, "50 embedded states are valid densities".into()))
}

fn gradients() -> Result<(bool, String)> {
    let mut r = rng(13);
    let model = ClassifierModel::random_binary(EmbeddingSpec::new(Family::Dense, 3), 2, Measurement::ZAll, 3.0, &mut r)?;
    let s = LabeledSample::new(vec![0.3, -0.7, 1.1], 1);
    let g = model.grad_params(&s)?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..g.len() {
        let mut m = model.clone();
        m.params.angles[k] += h;
        let up = m.loss(&s.x, s.y)?;
        m.params.angles[k] -= 2.0 * h;
        let down = m.loss(&s.x, s.y)?;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g[k] - fd).abs() / fd.abs().max(1e-3));
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
}

fn quantum_attack_budget() -> Result<(bool, String)> {
    let mut r = rng(14);
    let model = ClassifierModel::random_binary(EmbeddingSpec::new(Family::Angle, 2), 2, Measurement::ZAll, 10.0, &mut r)?;
    for i in 0..20 {
        let x = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let state = model.state(&x)?;
        let eps = 0.01 + 0.05 * i as f64;
        let out = quantum_fgsm_state(&model, &state, i % 2, SchattenOrder::Infinity, eps, 30, eps)?;
        let dist = schatten_distance(&state, &out.state, SchattenOrder::Infinity)?;
        if !(dist < eps || out.fell_back) || out.iterations > 30 {
            return Ok((false, format!("budget {eps} exceeded: distance {dist}")));
        }
    }
    Ok((true, "20 attacks within budget".into()))
}

fn rc_dominance() -> Result<(bool, String)> {
    let (train, _) = gen_dataset(&GaussianTaskSpec {
        d: 2,
        train_m: 12,
        test_m: 0,
        seed: 15,
    });
    let e = Embedding::new(EmbeddingSpec::new(Family::Angle, 2))?;
    let states = train.iter().map(|s| e.state(&s.x)).collect::<Result<Vec<_>>>()?;
    let set = StateSet::from_states(&states)?;
    for r in ORDERS {
        let mc = mc_rc_estimate(&set, &[], r, 1.0, 200, 3)?;
        let bound = rc_bound_thm2(&set, r, 1.0)?;
        if mc.mean > bound + 3.0 * mc.stderr {
            return Ok((false, format!("r = {r}: estimate {} above bound {bound}", mc.mean)));
        }
    }
    let pair = StateSet::from_states(&[pure(&[1.0, 0.0]), pure(&[0.0, 1.0])])?;
    let exact = mc_rc_exact(&pair, SchattenOrder::Infinity, 1.0)?;
    Ok(((exact - 1.0).abs() <= 1e-12, format!("orthogonal pair RC {exact}")))
}

fn determinism() -> Result<(bool, String)> {
    let spec = GaussianTaskSpec::default();
    Ok((gen_dataset(&spec) == gen_dataset(&spec), "dataset regenerates bit-identically".into()))
}

/// Runs every check; the caller decides how to report.
pub fn run() -> Vec<Check> {
    vec![
        check("schatten norms", norms),
        check("embeddings", embeddings_valid),
        check("parameter shift", gradients),
        check("quantum attack budget", quantum_attack_budget),
        check("rc bound dominance", rc_dominance),
        check("determinism", determinism),
    ]
}
