//! Single-run drivers behind the `train` and `bounds` subcommands.

use super::csv::{Cell, Table};
use super::dataset::gen_dataset;
use super::train::{estimate_risks, train_adversarial, RiskTable, TrainOutcome};
use super::ExperimentConfig;
use crate::attacks::AttackSpace;
use crate::bounds::{
    arc_bound_thm3, covering_number_lemma1, excess_for, multiclass_bound_thm5, noisy_bounds_thm4, pac_slack, rc_bound_thm2, BoundConfig,
    StateSet, Theorem,
};
use crate::embeddings::{Embedding, Family};
use crate::error::{Error, Result};
use crate::model::{CircuitParams, ClassifierModel};
use crate::random::rng;

/// Model at its seeded initialization.
pub fn initial_model(cfg: &ExperimentConfig) -> Result<ClassifierModel> {
    let embedding = Embedding::new(cfg.embedding.spec(cfg.task.d))?;
    let params = CircuitParams::random(cfg.model.layers, embedding.n_qubits(), &mut rng(cfg.train.seed));
    ClassifierModel::new(
        embedding,
        params,
        cfg.model.measurement,
        cfg.model.num_classes,
        cfg.model.alpha,
        cfg.model.gamma,
    )
}

/// Trains on the configured task and evaluates the final risks.
pub fn train_run(cfg: &ExperimentConfig) -> Result<(TrainOutcome, RiskTable)> {
    let (train, test) = gen_dataset(&cfg.task);
    let out = train_adversarial(initial_model(cfg)?, &train, &cfg.train, &cfg.attack)?;
    let risks = estimate_risks(&out.model, &train, &test, &cfg.attack)?;
    Ok((out, risks))
}

pub const BOUNDS_HEADER: [&str; 10] = ["theorem", "r", "p", "epsilon", "m", "d", "d_H", "family", "variant", "value"];

/// One row per requested theorem, evaluated on the embedded training set.
///
/// The dataset fixes m, d and d_H; the `pac` row holds the slack term and
/// the `lemma1` row the log covering number.
pub fn bounds_table(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.bounds.validate()?;
    let (train, _) = gen_dataset(&super::GaussianTaskSpec {
        test_m: 0,
        ..cfg.task.clone()
    });
    if train.is_empty() {
        return Err(Error::InvalidParameter("task.train_m must be positive".into()));
    }
    let spec = cfg.embedding.spec(cfg.task.d);
    let embedding = Embedding::new(spec.clone())?;
    let states = train.iter().map(|s| embedding.state(&s.x)).collect::<Result<Vec<_>>>()?;
    let set = StateSet::from_states(&states)?;
    let min_x_norm = if spec.family == Family::Amplitude {
        train
            .iter()
            .map(|s| s.x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    } else {
        cfg.bounds.min_x_norm
    };
    let bc = BoundConfig {
        m: train.len(),
        d: cfg.task.d,
        d_h: set.hilbert_dim(),
        layers: spec.effective_layers(),
        min_x_norm,
        ..cfg.bounds.clone()
    };
    let quantum = cfg.attack.space == AttackSpace::Quantum;
    let rc = || rc_bound_thm2(&set, bc.r, bc.b);
    let excess = || excess_for(&bc, Some(spec.family), quantum);

    let mut table = Table::new(BOUNDS_HEADER.to_vec());
    for &th in &bc.theorems {
        let value = match th {
            Theorem::Thm2 => rc()?,
            Theorem::Thm3 => arc_bound_thm3(rc()?, bc.b, excess()?, bc.r, bc.m),
            Theorem::Thm4 => noisy_bounds_thm4(&set, bc.r, bc.p, bc.b, bc.epsilon)?.1,
            Theorem::Thm5 => multiclass_bound_thm5(rc()?, bc.num_classes, bc.gamma, bc.b, excess()?, bc.r, bc.m)?,
            Theorem::Lemma1 => covering_number_lemma1(bc.r, bc.b, bc.cover_delta, bc.d_h)?,
            Theorem::Pac => pac_slack(bc.b_loss, bc.delta_conf, bc.m)?,
        };
        table.push(vec![
            Cell::text(th.id()),
            Cell::text(bc.r.to_string()),
            Cell::text(bc.p.to_string()),
            Cell::Num(bc.epsilon),
            Cell::Int(bc.m as u64),
            Cell::Int(bc.d as u64),
            Cell::Int(bc.d_h as u64),
            Cell::text(spec.family.name()),
            Cell::text(bc.variant.name()),
            Cell::Num(value),
        ]);
    }
    Ok(table)
}
