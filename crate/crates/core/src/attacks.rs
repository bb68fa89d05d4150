//! Classical ℓ_p input attacks and the quantum FGSM channel attack.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassifierModel;
use crate::qmath::{eigvalsh, schatten_norm_of_eigs, CMatrix, DensityMatrix, SchattenOrder, C64};
use crate::random::standard_normal;
use crate::sim::{rot, QState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackSpace {
    #[default]
    #[serde(alias = "Classical")]
    Classical,
    #[serde(alias = "Quantum")]
    Quantum,
}

/// Attack block of the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub space: AttackSpace,
    pub p: SchattenOrder,
    pub epsilon: f64,
    /// Step of the quantum channel; `None` means lr = ε.
    pub lr: Option<f64>,
    pub max_iter: usize,
    pub seed: u64,
    /// Fall back to the clean input when the attack does not raise the loss.
    pub reject_non_increasing: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            space: AttackSpace::Classical,
            p: SchattenOrder::Infinity,
            epsilon: 0.0,
            lr: None,
            max_iter: 30,
            seed: 0,
            reject_non_increasing: true,
        }
    }
}

impl AttackConfig {
    pub fn classical(p: SchattenOrder, epsilon: f64) -> Self {
        Self {
            p,
            epsilon,
            ..Self::default()
        }
    }

    pub fn quantum(p: SchattenOrder, epsilon: f64, lr: f64, max_iter: usize) -> Self {
        Self {
            space: AttackSpace::Quantum,
            p,
            epsilon,
            lr: Some(lr),
            max_iter,
            ..Self::default()
        }
    }

    pub fn effective_lr(&self) -> f64 {
        self.lr.unwrap_or(self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Some(lr) = self.lr {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::InvalidParameter(format!("lr must be >= 0, got {lr}")));
            }
        }
        SchattenOrder::new(self.p.value())?;
        Ok(())
    }
}

/// ℓ_p norm of a real vector.
pub fn lp_norm(v: &[f64], p: SchattenOrder) -> f64 {
    match p {
        SchattenOrder::Infinity => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        SchattenOrder::Finite(p) => {
            let s = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if s == 0.0 {
                return 0.0;
            }
            s * v.iter().map(|x| (x.abs() / s).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Steepest-ascent step of ℓ_p length ε along the gradient.
pub fn steepest_ascent_step(grad: &[f64], p: SchattenOrder, epsilon: f64) -> Vec<f64> {
    if epsilon == 0.0 || grad.iter().all(|g| *g == 0.0) {
        return vec![0.0; grad.len()];
    }
    let mut delta: Vec<f64> = match p {
        SchattenOrder::Infinity => grad.iter().map(|g| epsilon * sign(*g)).collect(),
        SchattenOrder::Finite(p) if p == 1.0 => {
            let k = grad
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, g)| if g.abs() > acc.1 { (i, g.abs()) } else { acc })
                .0;
            let mut d = vec![0.0; grad.len()];
            d[k] = epsilon * sign(grad[k]);
            d
        }
        SchattenOrder::Finite(p) => {
            let s = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let w: Vec<f64> = grad.iter().map(|g| sign(*g) * (g.abs() / s).powf(1.0 / (p - 1.0))).collect();
            let n = lp_norm(&w, SchattenOrder::Finite(p));
            w.iter().map(|v| epsilon * v / n).collect()
        }
    };
    let n = lp_norm(&delta, p);
    if n > epsilon {
        for v in delta.iter_mut() {
            *v *= epsilon / n;
        }
    }
    delta
}

/// One-step FGSM in input space.
pub fn fgsm_classical(model: &ClassifierModel, x: &[f64], y: usize, p: SchattenOrder, epsilon: f64) -> Result<Vec<f64>> {
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let g = model.grad_input(x, y)?;
    let delta = steepest_ascent_step(&g, p, epsilon);
    Ok(x.iter().zip(&delta).map(|(a, b)| a + b).collect())
}

/// x + δ with δ uniform in the ℓ_∞ or ℓ₂ ball of radius ε.
pub fn random_perturb<R: Rng + ?Sized>(x: &[f64], p: SchattenOrder, epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    match p {
        SchattenOrder::Infinity => Ok(x.iter().map(|v| v + epsilon * (2.0 * rng.random::<f64>() - 1.0)).collect()),
        SchattenOrder::Finite(p) if p == 2.0 => {
            let d = x.len();
            let dir: Vec<f64> = loop {
                let g: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
                if lp_norm(&g, SchattenOrder::TWO) > 1e-12 {
                    break g;
                }
            };
            let n = lp_norm(&dir, SchattenOrder::TWO);
            let radius = epsilon * rng.random::<f64>().powf(1.0 / d as f64);
            Ok(x.iter().zip(&dir).map(|(v, u)| v + radius * u / n).collect())
        }
        other => Err(Error::UnsupportedOrder(format!("random baseline supports p = 2 or inf, got {other}"))),
    }
}

/// One layer of per-qubit Rot gates; all-zero angles give the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumAttackChannel {
    pub thetas: Vec<f64>,
}

impl QuantumAttackChannel {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            thetas: vec![0.0; 3 * n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.thetas.len() / 3
    }

    pub fn is_identity(&self) -> bool {
        self.thetas.iter().all(|t| *t == 0.0)
    }

    pub fn apply(&self, state: &QState) -> QState {
        self.apply_shifted(state, None)
    }

    fn apply_shifted(&self, state: &QState, shift: Option<(usize, f64)>) -> QState {
        let mut out = state.clone();
        if self.is_identity() && shift.is_none() {
            return out;
        }
        for q in 0..self.n_qubits() {
            let mut t = [self.thetas[3 * q], self.thetas[3 * q + 1], self.thetas[3 * q + 2]];
            if let Some((i, d)) = shift {
                if i / 3 == q {
                    t[i % 3] += d;
                }
            }
            out.apply(q, &rot(t[0], t[1], t[2]));
        }
        out
    }

    pub fn unitary(&self) -> CMatrix {
        let n = self.n_qubits();
        let dim = 1 << n;
        CMatrix::from_fn(dim, |i, j| {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[j] = C64::new(1.0, 0.0);
            let QState::Pure(w) = self.apply(&QState::Pure(v)) else { unreachable!() };
            w[i]
        })
    }
}

/// ‖a − b‖_p (Schatten). Pure pairs use the rank-2 closed form ±√(1 − |⟨ψ|φ⟩|²).
pub fn schatten_distance(a: &QState, b: &QState, p: SchattenOrder) -> Result<f64> {
    match (a, b) {
        (QState::Pure(u), QState::Pure(v)) => {
            let ov: C64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
            let s = (1.0 - ov.norm_sqr()).max(0.0).sqrt();
            Ok(schatten_norm_of_eigs(&[s, -s], p))
        }
        _ => {
            let diff = a.density_matrix().sub(&b.density_matrix()).symmetrize();
            Ok(schatten_norm_of_eigs(&eigvalsh(&diff)?, p))
        }
    }
}

/// ∇_θ loss(U_θ(ρ)) at θ = 0 by parameter shift through channel and classifier.
pub fn channel_gradient(model: &ClassifierModel, state: &QState, y: usize) -> Vec<f64> {
    let n = model.n_qubits();
    let channel = QuantumAttackChannel::identity(n);
    let (_, dl) = model.loss_from_scores(&model.scores_state(state), y);
    (0..3 * n)
        .map(|i| {
            let p = model.scores_state(&channel.apply_shifted(state, Some((i, FRAC_PI_2))));
            let m = model.scores_state(&channel.apply_shifted(state, Some((i, -FRAC_PI_2))));
            dl.iter().zip(p.iter().zip(&m)).map(|(d, (a, b))| d * 0.5 * (a - b)).sum()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct QuantumFgsmResult {
    pub state: QState,
    pub channel: QuantumAttackChannel,
    /// Halvings performed.
    pub iterations: usize,
    /// True when the loop ran out and the identity was returned.
    pub fell_back: bool,
    pub distance: f64,
}

/// Quantum FGSM: θ = lr·sign(∇θ) then halve until ‖ρ − U_θ(ρ)‖_p < ε,
/// returning the identity if `max_iter` halvings are used up.
pub fn quantum_fgsm_state(
    model: &ClassifierModel,
    state: &QState,
    y: usize,
    p: SchattenOrder,
    epsilon: f64,
    max_iter: usize,
    lr: f64,
) -> Result<QuantumFgsmResult> {
    let g = channel_gradient(model, state, y);
    let mut channel = QuantumAttackChannel {
        thetas: g.iter().map(|v| lr * sign(*v)).collect(),
    };
    let mut out = channel.apply(state);
    let mut dist = schatten_distance(state, &out, p)?;
    let mut i = 0;
    while dist >= epsilon && i < max_iter {
        for t in channel.thetas.iter_mut() {
            *t /= 2.0;
        }
        out = channel.apply(state);
        dist = schatten_distance(state, &out, p)?;
        i += 1;
    }
    let fell_back = i == max_iter;
    if fell_back {
        channel = QuantumAttackChannel::identity(model.n_qubits());
        out = state.clone();
        dist = 0.0;
    }
    Ok(QuantumFgsmResult {
        state: out,
        channel,
        iterations: i,
        fell_back,
        distance: dist,
    })
}

pub fn quantum_fgsm(
    model: &ClassifierModel,
    rho: &DensityMatrix,
    y: usize,
    p: SchattenOrder,
    epsilon: f64,
    max_iter: usize,
    lr: f64,
) -> Result<DensityMatrix> {
    let st = QState::Mixed(rho.as_matrix().clone());
    let res = quantum_fgsm_state(model, &st, y, p, epsilon, max_iter, lr)?;
    Ok(res.state.into_density_unchecked())
}

/// Attacked point and its loss.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub clean_loss: f64,
    pub loss: f64,
    /// Embedded state at which `loss` was evaluated.
    pub state: QState,
    /// Classical attacks only: the perturbed input.
    pub x_adv: Option<Vec<f64>>,
    pub rejected: bool,
}

/// Runs the configured attack on one sample, applying the rejection rule.
pub fn attack_sample(model: &ClassifierModel, x: &[f64], y: usize, cfg: &AttackConfig) -> Result<AttackOutcome> {
    let clean_state = model.state(x)?;
    let clean_loss = model.loss_state(&clean_state, y);
    let (state, x_adv) = if cfg.epsilon == 0.0 {
        (clean_state.clone(), Some(x.to_vec()))
    } else {
        match cfg.space {
            AttackSpace::Classical => {
                let xa = fgsm_classical(model, x, y, cfg.p, cfg.epsilon)?;
                (model.state(&xa)?, Some(xa))
            }
            AttackSpace::Quantum => {
                let r = quantum_fgsm_state(model, &clean_state, y, cfg.p, cfg.epsilon, cfg.max_iter, cfg.effective_lr())?;
                (r.state, None)
            }
        }
    };
    let loss = model.loss_state(&state, y);
    if cfg.reject_non_increasing && loss < clean_loss {
        return Ok(AttackOutcome {
            clean_loss,
            loss: clean_loss,
            state: clean_state,
            x_adv: Some(x.to_vec()),
            rejected: true,
        });
    }
    Ok(AttackOutcome {
        clean_loss,
        loss,
        state,
        x_adv,
        rejected: false,
    })
}

/// Loss at the attack's feasible output.
pub fn adversarial_loss(model: &ClassifierModel, x: &[f64], y: usize, cfg: &AttackConfig) -> Result<f64> {
    Ok(attack_sample(model, x, y, cfg)?.loss)
}

/// Adversarial losses over an ascending ε grid, each point warm-started with
/// the best feasible point found at smaller ε.
pub fn adversarial_loss_grid(model: &ClassifierModel, x: &[f64], y: usize, cfg: &AttackConfig, epsilons: &[f64]) -> Result<Vec<f64>> {
    if epsilons.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("epsilon grid must be ascending".into()));
    }
    let mut best = f64::NEG_INFINITY;
    epsilons
        .iter()
        .map(|&eps| {
            let c = AttackConfig {
                epsilon: eps,
                ..cfg.clone()
            };
            best = best.max(adversarial_loss(model, x, y, &c)?);
            Ok(best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{EmbeddingSpec, Family};
    use crate::model::Measurement;
    use crate::qmath::validate_density;
    use crate::random::rng;
    use proptest::prelude::*;

    fn model(fam: Family, d: usize, seed: u64) -> ClassifierModel {
        ClassifierModel::random_binary(EmbeddingSpec::new(fam, d), 2, Measurement::ZAll, 10.0, &mut rng(seed)).unwrap()
    }

    #[test]
    fn sign_rule_example() {
        let d = steepest_ascent_step(&[-0.3, 0.7], SchattenOrder::Infinity, 0.3);
        assert_eq!(d, vec![-0.3, 0.3]);
        let d = steepest_ascent_step(&[3.0, 4.0], SchattenOrder::TWO, 1.0);
        assert!((d[0] - 0.6).abs() < 1e-15 && (d[1] - 0.8).abs() < 1e-15);
        let d = steepest_ascent_step(&[0.1, -0.5, 0.2], SchattenOrder::ONE, 0.4);
        assert_eq!(d, vec![0.0, -0.4, 0.0]);
        assert_eq!(steepest_ascent_step(&[0.0, 0.0], SchattenOrder::Infinity, 0.3), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_budget_is_identity() {
        let m = model(Family::Angle, 2, 1);
        let x = [0.2, 0.5];
        assert_eq!(fgsm_classical(&m, &x, 0, SchattenOrder::Infinity, 0.0).unwrap(), x.to_vec());
        assert_eq!(random_perturb(&x, SchattenOrder::TWO, 0.0, &mut rng(1)).unwrap(), x.to_vec());
        let clean = m.loss(&x, 1).unwrap();
        assert_eq!(adversarial_loss(&m, &x, 1, &AttackConfig::classical(SchattenOrder::Infinity, 0.0)).unwrap(), clean);
    }

    #[test]
    fn random_perturbations_in_ball() {
        let mut r = rng(2);
        let x = [0.0; 5];
        for _ in 0..10_000 {
            let v = random_perturb(&x, SchattenOrder::TWO, 0.3, &mut r).unwrap();
            assert!(lp_norm(&v, SchattenOrder::TWO) <= 0.3 + 1e-15);
            let v = random_perturb(&x, SchattenOrder::Infinity, 0.3, &mut r).unwrap();
            assert!(v.iter().all(|c| c.abs() <= 0.3));
        }
        assert!(random_perturb(&x, SchattenOrder::ONE, 0.3, &mut r).is_err());
    }

    #[test]
    fn fgsm_beats_random_baseline() {
        let m = model(Family::Angle, 2, 4);
        let mut r = rng(5);
        let (mut fg, mut rd) = (0.0, 0.0);
        for i in 0..100 {
            let x = [standard_normal(&mut r), standard_normal(&mut r)];
            let y = i % 2;
            let xa = fgsm_classical(&m, &x, y, SchattenOrder::Infinity, 0.3).unwrap();
            fg += m.loss(&xa, y).unwrap();
            let xr = random_perturb(&x, SchattenOrder::Infinity, 0.3, &mut r).unwrap();
            rd += m.loss(&xr, y).unwrap();
        }
        assert!(fg >= rd, "fgsm {fg} < random {rd}");
    }

    #[test]
    fn fgsm_hits_box_corner_optimum() {
        // tiny budget keeps the loss locally linear, so the best corner is the sign corner
        let m = model(Family::Angle, 2, 9);
        let x = [0.4, -0.2];
        let eps = 1e-4;
        let xa = fgsm_classical(&m, &x, 0, SchattenOrder::Infinity, eps).unwrap();
        let fgsm_loss = m.loss(&xa, 0).unwrap();
        let mut best = f64::NEG_INFINITY;
        for s0 in [-1.0, 1.0] {
            for s1 in [-1.0, 1.0] {
                best = best.max(m.loss(&[x[0] + s0 * eps, x[1] + s1 * eps], 0).unwrap());
            }
        }
        assert!((fgsm_loss - best).abs() < 1e-12);
    }

    #[test]
    fn quantum_fgsm_zero_lr_and_tiny_budget_return_input() {
        let m = model(Family::Angle, 3, 6);
        let rho = m.embedding().embed(&[0.1, 0.2, 0.3]).unwrap();
        let out = quantum_fgsm(&m, &rho, 0, SchattenOrder::Infinity, 0.01, 30, 0.0).unwrap();
        assert!(out.as_matrix().max_abs_diff(rho.as_matrix()) < 1e-15);
        let st = m.state(&[0.1, 0.2, 0.3]).unwrap();
        let res = quantum_fgsm_state(&m, &st, 0, SchattenOrder::Infinity, 1e-300, 5, 0.5).unwrap();
        assert!(res.fell_back && res.state == st);
    }

    #[test]
    fn channel_is_identity_at_zero() {
        let c = QuantumAttackChannel::identity(2);
        assert!(c.unitary().max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn noisy_config_budget_and_loss_increase() {
        let spec = EmbeddingSpec::new(Family::Dense, 6).with_depolarizing(0.011);
        let m = ClassifierModel::random_binary(spec, 4, Measurement::ZAll, 10.0, &mut rng(17)).unwrap();
        let mut r = rng(18);
        let mut up = 0;
        for i in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| standard_normal(&mut r)).collect();
            let st = m.state(&x).unwrap();
            let res = quantum_fgsm_state(&m, &st, i % 2, SchattenOrder::Infinity, 0.001, 30, 0.001).unwrap();
            assert!(res.fell_back || res.distance < 0.001);
            if m.loss_state(&res.state, i % 2) >= m.loss_state(&st, i % 2) {
                up += 1;
            }
        }
        assert!(up >= 70, "loss increased on {up}/100 samples");
    }

    #[test]
    fn warm_started_grid_is_monotone() {
        let m = model(Family::Dense, 4, 12);
        let cfg = AttackConfig::classical(SchattenOrder::Infinity, 0.0);
        let grid = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8];
        let vals = adversarial_loss_grid(&m, &[0.3, -0.1, 0.9, 0.2], 1, &cfg, &grid).unwrap();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn classical_step_is_feasible(g in proptest::collection::vec(-2.0f64..2.0, 1..6),
                                      p in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)],
                                      eps in 0.0f64..1.0) {
            let order = SchattenOrder::new(p).unwrap();
            let d = steepest_ascent_step(&g, order, eps);
            prop_assert!(lp_norm(&d, order) <= eps + 1e-12);
        }

        #[test]
        fn quantum_fgsm_conformance(seed in 0u64..1000, eps in 1e-4f64..0.5, lr in 0.0f64..1.0,
                                     max_iter in 0usize..12, noisy in proptest::bool::ANY,
                                     p in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)]) {
            let lam = if noisy { 0.05 } else { 0.0 };
            let spec = EmbeddingSpec::new(Family::Angle, 2).with_depolarizing(lam);
            let m = ClassifierModel::random_binary(spec, 1, Measurement::ZFirst, 5.0, &mut rng(seed)).unwrap();
            let x = [seed as f64 * 0.01, -0.3];
            let st = m.state(&x).unwrap();
            let order = SchattenOrder::new(p).unwrap();
            let res = quantum_fgsm_state(&m, &st, (seed % 2) as usize, order, eps, max_iter, lr).unwrap();
            prop_assert!(res.iterations <= max_iter);
            prop_assert!(res.state == st || schatten_distance(&st, &res.state, order).unwrap() < eps);
            prop_assert!(validate_density(res.state.density_matrix(), 1e-10).is_ok());
        }

        #[test]
        fn rejection_rule_makes_attack_non_decreasing(seed in 0u64..1000, eps in 0.0f64..1.0) {
            let m = model(Family::Angle, 2, seed);
            let x = [0.5, -0.4];
            let cfg = AttackConfig::classical(SchattenOrder::Infinity, eps);
            let o = attack_sample(&m, &x, 0, &cfg).unwrap();
            prop_assert!(o.loss >= o.clean_loss);
            prop_assert!((0.0..=1.0).contains(&o.loss));
        }
    }
}
