//! Full-batch adversarial training and clean/adversarial risk estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{adversarial_loss_grid, attack_sample, AttackConfig};
use crate::error::{Error, Result};
use crate::model::{CircuitParams, ClassifierModel, LabeledSample};
use crate::stats::{mean_stderr, neumaier_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    #[serde(alias = "GradientDescent")]
    GradientDescent,
    #[serde(alias = "Adam")]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Seeds the initial circuit parameters.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 0.1,
            optimizer: Optimizer::GradientDescent,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    /// Adversarial empirical risk at the start of each epoch.
    pub trace: Vec<f64>,
    /// Adversarial empirical risk at the returned parameters.
    pub final_risk: f64,
    /// Parameters after each requested epoch count, in request order.
    pub snapshots: Vec<(usize, CircuitParams)>,
}

/// Adversarial empirical risk and its parameter gradient, attacks recomputed
/// at the current parameters.
fn adversarial_risk_and_grad(model: &ClassifierModel, data: &[LabeledSample], attack: &AttackConfig) -> Result<(f64, Vec<f64>)> {
    let per_sample: Vec<(f64, Vec<f64>)> = data
        .par_iter()
        .map(|s| {
            let out = attack_sample(model, &s.x, s.y, attack)?;
            Ok((out.loss, model.grad_params_state(&out.state, s.y)))
        })
        .collect::<Result<_>>()?;
    let m = data.len() as f64;
    let risk = neumaier_sum(per_sample.iter().map(|(l, _)| *l)) / m;
    let grad = (0..model.params.len())
        .map(|k| neumaier_sum(per_sample.iter().map(|(_, g)| g[k])) / m)
        .collect();
    Ok((risk, grad))
}

fn adversarial_risk(model: &ClassifierModel, data: &[LabeledSample], attack: &AttackConfig) -> Result<f64> {
    let losses: Vec<f64> = data
        .par_iter()
        .map(|s| Ok(attack_sample(model, &s.x, s.y, attack)?.loss))
        .collect::<Result<_>>()?;
    Ok(neumaier_sum(losses) / data.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Minimizes (1/m)·Σ loss(attack(xᵢ), yᵢ) by full-batch steps.
pub fn train_adversarial(model: ClassifierModel, train: &[LabeledSample], cfg: &TrainConfig, attack: &AttackConfig) -> Result<TrainOutcome> {
    train_with_snapshots(model, train, cfg, attack, &[])
}

/// As [`train_adversarial`], also recording the parameters after each epoch
/// count in `snapshot_epochs` (0 means the initial parameters).
pub fn train_with_snapshots(
    mut model: ClassifierModel,
    train: &[LabeledSample],
    cfg: &TrainConfig,
    attack: &AttackConfig,
    snapshot_epochs: &[usize],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    attack.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    if let Some(&e) = snapshot_epochs.iter().find(|&&e| e > cfg.epochs) {
        return Err(Error::InvalidParameter(format!(
            "snapshot at epoch {e} is past the last epoch {}",
            cfg.epochs
        )));
    }
    let mut snaps: Vec<Option<CircuitParams>> = vec![None; snapshot_epochs.len()];
    let record = |epoch: usize, params: &CircuitParams, snaps: &mut Vec<Option<CircuitParams>>| {
        for (slot, &e) in snaps.iter_mut().zip(snapshot_epochs) {
            if e == epoch {
                *slot = Some(params.clone());
            }
        }
    };
    record(0, &model.params, &mut snaps);
    let mut adam = Adam::new(model.params.len());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (risk, grad) = adversarial_risk_and_grad(&model, train, attack)?;
        if !risk.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(risk);
        match cfg.optimizer {
            Optimizer::GradientDescent => {
                for (a, g) in model.params.angles.iter_mut().zip(&grad) {
                    *a -= cfg.learning_rate * g;
                }
            }
            Optimizer::Adam => adam.step(&mut model.params.angles, &grad, cfg.learning_rate),
        }
        record(epoch + 1, &model.params, &mut snaps);
    }
    let final_risk = adversarial_risk(&model, train, attack)?;
    if !final_risk.is_finite() {
        return Err(Error::Divergence { epoch: cfg.epochs });
    }
    let snapshots = snapshot_epochs
        .iter()
        .zip(snaps)
        .map(|(&e, p)| (e, p.expect("every snapshot epoch is reached")))
        .collect();
    Ok(TrainOutcome {
        model,
        trace,
        final_risk,
        snapshots,
    })
}

/// Clean and adversarial risks on the train and test sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub clean_train: f64,
    pub clean_test: f64,
    pub adv_train: f64,
    pub adv_test: f64,
    pub clean_gap: f64,
    pub adv_gap: f64,
    pub clean_test_stderr: f64,
    pub adv_test_stderr: f64,
}

impl RiskTable {
    fn new(clean_train: f64, clean_test: (f64, f64), adv_train: f64, adv_test: (f64, f64)) -> Self {
        Self {
            clean_train,
            clean_test: clean_test.0,
            adv_train,
            adv_test: adv_test.0,
            clean_gap: clean_test.0 - clean_train,
            adv_gap: adv_test.0 - adv_train,
            clean_test_stderr: clean_test.1,
            adv_test_stderr: adv_test.1,
        }
    }

    /// adv_gap − clean_gap
    pub fn gap_diff(&self) -> f64 {
        self.adv_gap - self.clean_gap
    }
}

/// (clean, adversarial…) losses per sample over an ascending ε grid.
fn per_sample_grid(model: &ClassifierModel, data: &[LabeledSample], attack: &AttackConfig, epsilons: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    data.par_iter()
        .map(|s| {
            let clean = model.loss(&s.x, s.y)?;
            let adv = adversarial_loss_grid(model, &s.x, s.y, attack, epsilons)?;
            Ok((clean, adv))
        })
        .collect()
}

fn mean_of(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    mean_stderr(&v)
}

/// One risk table per grid value; each adversarial loss is the best over
/// the grid prefix, so the adversarial columns are monotone in ε.
pub fn estimate_risks_grid(
    model: &ClassifierModel,
    train: &[LabeledSample],
    test: &[LabeledSample],
    attack: &AttackConfig,
    epsilons: &[f64],
) -> Result<Vec<RiskTable>> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidParameter("risk estimation needs non-empty train and test sets".into()));
    }
    let tr = per_sample_grid(model, train, attack, epsilons)?;
    let te = per_sample_grid(model, test, attack, epsilons)?;
    let clean_train = mean_of(tr.iter().map(|s| s.0)).0;
    let clean_test = mean_of(te.iter().map(|s| s.0));
    let tables = (0..epsilons.len())
        .map(|k| {
            let adv_train = mean_of(tr.iter().map(|s| s.1[k])).0;
            let adv_test = mean_of(te.iter().map(|s| s.1[k]));
            RiskTable::new(clean_train, clean_test, adv_train, adv_test)
        })
        .collect::<Vec<_>>();
    if tables.iter().any(|t| !(t.adv_test.is_finite() && t.adv_train.is_finite() && clean_train.is_finite() && clean_test.0.is_finite())) {
        return Err(Error::NonFinite("risk table"));
    }
    Ok(tables)
}

/// Risks with the configured attack as the inner maximization.
pub fn estimate_risks(model: &ClassifierModel, train: &[LabeledSample], test: &[LabeledSample], attack: &AttackConfig) -> Result<RiskTable> {
    Ok(estimate_risks_grid(model, train, test, attack, &[attack.epsilon])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{EmbeddingSpec, Family};
    use crate::experiments::dataset::{gen_dataset, GaussianTaskSpec};
    use crate::model::Measurement;
    use crate::qmath::SchattenOrder;
    use crate::random::rng;

    fn setup(seed: u64) -> (ClassifierModel, Vec<LabeledSample>, Vec<LabeledSample>) {
        let (train, test) = gen_dataset(&GaussianTaskSpec {
            d: 2,
            train_m: 20,
            test_m: 100,
            seed,
        });
        let model = ClassifierModel::random_binary(EmbeddingSpec::new(Family::Angle, 2), 4, Measurement::ZAll, 10.0, &mut rng(seed + 100)).unwrap();
        (model, train, test)
    }

    #[test]
    fn zero_epochs_leave_the_model_unchanged() {
        let (model, train, _) = setup(1);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train_adversarial(model.clone(), &train, &cfg, &AttackConfig::classical(SchattenOrder::Infinity, 0.3)).unwrap();
        assert_eq!(out.model.params, model.params);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn zero_budget_risks_coincide() {
        let (model, train, test) = setup(2);
        let t = estimate_risks(&model, &train, &test, &AttackConfig::classical(SchattenOrder::Infinity, 0.0)).unwrap();
        assert_eq!(t.adv_train, t.clean_train);
        assert_eq!(t.adv_test, t.clean_test);
        assert_eq!(t.gap_diff(), 0.0);
    }

    #[test]
    fn adversarial_risk_dominates_clean_after_training() {
        let (model, train, test) = setup(3);
        let attack = AttackConfig::classical(SchattenOrder::Infinity, 0.3);
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train_adversarial(model, &train, &cfg, &attack).unwrap();
        let t = estimate_risks(&out.model, &train, &test, &attack).unwrap();
        assert!(t.adv_train >= t.clean_train);
        assert!(t.adv_test >= t.clean_test);
        assert_eq!(out.final_risk, t.adv_train);
    }

    #[test]
    fn snapshots_match_shorter_runs() {
        let (model, train, _) = setup(4);
        let attack = AttackConfig::classical(SchattenOrder::Infinity, 0.1);
        let long = TrainConfig {
            epochs: 4,
            ..TrainConfig::default()
        };
        let out = train_with_snapshots(model.clone(), &train, &long, &attack, &[2, 0, 4]).unwrap();
        let short = train_adversarial(model.clone(), &train, &TrainConfig { epochs: 2, ..long.clone() }, &attack).unwrap();
        assert_eq!(out.snapshots[0], (2, short.model.params.clone()));
        assert_eq!(out.snapshots[1], (0, model.params.clone()));
        assert_eq!(out.snapshots[2], (4, out.model.params.clone()));
        assert_eq!(out.trace[..2], short.trace[..]);
    }

    #[test]
    fn adam_lowers_the_clean_risk() {
        let (model, train, _) = setup(5);
        let attack = AttackConfig::classical(SchattenOrder::Infinity, 0.0);
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 0.05,
            optimizer: Optimizer::Adam,
            seed: 0,
        };
        let out = train_adversarial(model, &train, &cfg, &attack).unwrap();
        assert!(out.final_risk < out.trace[0]);
    }

    #[test]
    fn divergence_is_reported() {
        let (model, train, _) = setup(6);
        // Adam steps have magnitude ≈ lr, so the angles overflow to infinity
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 1e308,
            optimizer: Optimizer::Adam,
            seed: 0,
        };
        let err = train_adversarial(model, &train, &cfg, &AttackConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn grid_risks_are_monotone() {
        let (model, train, test) = setup(7);
        let grid = [0.0, 0.05, 0.1, 0.3];
        let t = estimate_risks_grid(&model, &train, &test, &AttackConfig::classical(SchattenOrder::Infinity, 0.0), &grid).unwrap();
        assert_eq!(t[0].adv_test, t[0].clean_test);
        for w in t.windows(2) {
            assert!(w[1].adv_train >= w[0].adv_train);
            assert!(w[1].adv_test >= w[0].adv_test);
        }
    }
}
