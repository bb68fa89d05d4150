//! Dimension (or sample-size, or epoch) sweeps and the noise-vs-ε sweep.
//!
//! Every cell derives its seeds from the config and its own coordinates,
//! so cells run in any order and the sorted table is the same bytes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csv::{Cell, Table};
use super::dataset::{gen_dataset, GaussianTaskSpec};
use super::train::{estimate_risks, estimate_risks_grid, train_with_snapshots, RiskTable};
use super::ExperimentConfig;
use crate::attacks::{AttackConfig, AttackSpace};
use crate::bounds::mc::{mc_rc_estimate, McEstimate};
use crate::bounds::{arc_bound_thm3, excess_classical, excess_quantum, noisy_bounds_thm4, rc_bound_thm2, StateSet, Variant};
use crate::embeddings::{Embedding, EmbeddingSpec, Family};
use crate::error::{Error, Result};
use crate::model::{CircuitParams, ClassifierModel, LabeledSample};
use crate::random::{mix_seed, rng};
use crate::stats::mean_stderr;

/// What the dimension sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    Dim,
    /// Training-set size over `values`.
    Samples,
    /// Training epochs over `values`, read off one run per seed.
    Epochs,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Dim => "dim",
            Axis::Samples => "samples",
            Axis::Epochs => "epochs",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dim" | "d" => Ok(Axis::Dim),
            "samples" => Ok(Axis::Samples),
            "epochs" => Ok(Axis::Epochs),
            _ => Err(Error::InvalidParameter(format!("unknown sweep axis '{s}' (dim, samples, epochs)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub axis: Axis,
    pub dims: Vec<usize>,
    pub families: Vec<Family>,
    /// Sample sizes or epoch counts for the non-dimension axes.
    pub values: Vec<usize>,
    pub n_seeds: usize,
    pub epsilons: Vec<f64>,
    pub lambda_min: f64,
    pub train_epsilon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: Axis::Dim,
            dims: vec![2, 4, 6, 8],
            families: vec![Family::Angle],
            values: Vec::new(),
            n_seeds: 5,
            epsilons: vec![0.001, 0.0025, 0.005, 0.0075, 0.01],
            lambda_min: 0.011,
            train_epsilon: 0.001,
        }
    }
}

pub const DIM_HEADER: [&str; 24] = [
    "kind",
    "family",
    "axis",
    "x",
    "seed",
    "clean_train",
    "clean_test",
    "adv_train",
    "adv_test",
    "clean_test_stderr",
    "adv_test_stderr",
    "clean_gap",
    "adv_gap",
    "gap_diff",
    "rc_bound",
    "mc_rc_mean",
    "mc_rc_stderr",
    "excess_prop1",
    "arc_prop1",
    "excess_appendix",
    "arc_appendix",
    "d",
    "train_m",
    "error",
];

pub const NOISE_HEADER: [&str; 20] = [
    "kind",
    "arm",
    "lambda",
    "epsilon",
    "seed",
    "clean_train",
    "clean_test",
    "adv_train",
    "adv_test",
    "clean_test_stderr",
    "adv_test_stderr",
    "clean_gap",
    "adv_gap",
    "rc_bound",
    "mc_rc_mean",
    "mc_rc_stderr",
    "excess_quantum",
    "arc_thm3",
    "thm4_upper",
    "error",
];

fn risk_values(t: &RiskTable) -> [f64; 8] {
    [
        t.clean_train,
        t.clean_test,
        t.adv_train,
        t.adv_test,
        t.clean_test_stderr,
        t.adv_test_stderr,
        t.clean_gap,
        t.adv_gap,
    ]
}

/// Numeric payload of one dimension-sweep cell, in header order from
/// `clean_train` to `arc_appendix`.
#[derive(Debug, Clone)]
struct DimMetrics {
    values: Vec<f64>,
}

struct Bounds {
    rc: f64,
    mc: McEstimate,
    excess: [f64; 2],
    arc: [f64; 2],
}

fn build_model(cfg: &ExperimentConfig, spec: EmbeddingSpec, init_seed: u64) -> Result<ClassifierModel> {
    let embedding = Embedding::new(spec)?;
    let params = CircuitParams::random(cfg.model.layers, embedding.n_qubits(), &mut rng(init_seed));
    ClassifierModel::new(
        embedding,
        params,
        cfg.model.measurement,
        cfg.model.num_classes,
        cfg.model.alpha,
        cfg.model.gamma,
    )
}

fn clean_states(model: &ClassifierModel, data: &[LabeledSample]) -> Result<StateSet> {
    let states = data.iter().map(|s| model.state(&s.x)).collect::<Result<Vec<_>>>()?;
    StateSet::from_states(&states)
}

fn labels(data: &[LabeledSample]) -> Vec<usize> {
    data.iter().map(|s| s.y).collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dim_bounds(cfg: &ExperimentConfig, model: &ClassifierModel, train: &[LabeledSample], mc_seed: u64) -> Result<Bounds> {
    let spec = model.embedding().spec();
    let states = clean_states(model, train)?;
    let b = model.observable_norm();
    let r = cfg.bounds.r;
    let rc = rc_bound_thm2(&states, r, b)?;
    let mc = mc_rc_estimate(&states, &labels(train), r, b, cfg.bounds.n_draws, mc_seed)?;
    let min_x_norm = if spec.family == Family::Amplitude {
        train.iter().map(|s| norm2(&s.x)).fold(f64::INFINITY, f64::min)
    } else {
        cfg.bounds.min_x_norm
    };
    let mut excess = [0.0; 2];
    let mut arc = [0.0; 2];
    for (k, v) in [Variant::Prop1, Variant::Appendix].into_iter().enumerate() {
        excess[k] = if cfg.attack.space == AttackSpace::Quantum {
            excess_quantum(cfg.attack.epsilon, spec.hilbert_dim(), r, cfg.attack.p)
        } else {
            excess_classical(v, spec.family, spec.input_dim, spec.effective_layers(), cfg.attack.p, cfg.attack.epsilon, min_x_norm)?
        };
        arc[k] = arc_bound_thm3(rc, b, excess[k], r, train.len());
    }
    Ok(Bounds { rc, mc, excess, arc })
}

fn dim_metrics(t: &RiskTable, bd: &Bounds) -> DimMetrics {
    let mut values = risk_values(t).to_vec();
    values.extend([
        t.gap_diff(),
        bd.rc,
        bd.mc.mean,
        bd.mc.stderr,
        bd.excess[0],
        bd.arc[0],
        bd.excess[1],
        bd.arc[1],
    ]);
    DimMetrics { values }
}

/// One training run; yields a result per axis value it covers.
struct DimJob {
    family_idx: usize,
    family: Family,
    seed: usize,
    d: usize,
    train_m: usize,
    /// (x index, x value) pairs produced by this job.
    xs: Vec<(usize, usize)>,
}

type DimCell = (usize, usize, usize, std::result::Result<DimMetrics, String>);

fn run_dim_job(cfg: &ExperimentConfig, job: &DimJob) -> Vec<DimCell> {
    let s = job.seed as u64;
    let d = job.d as u64;
    let inner = || -> Result<Vec<DimMetrics>> {
        let task = GaussianTaskSpec {
            d: job.d,
            train_m: job.train_m,
            test_m: cfg.task.test_m,
            seed: mix_seed(cfg.task.seed, &[d, s]),
        };
        let (train, test) = gen_dataset(&task);
        let spec = super::EmbeddingConfig {
            family: job.family,
            ..cfg.embedding.clone()
        }
        .spec(job.d);
        let init_seed = mix_seed(cfg.train.seed, &[job.family as u64, d, s]);
        let model = build_model(cfg, spec, init_seed)?;
        let mc_seed = mix_seed(cfg.bounds_seed(), &[job.family as u64, d, job.train_m as u64, s]);
        let bounds = dim_bounds(cfg, &model, &train, mc_seed)?;
        let (epochs, snaps) = match cfg.sweep.axis {
            Axis::Epochs => (
                job.xs.iter().map(|&(_, x)| x).max().unwrap_or(0),
                job.xs.iter().map(|&(_, x)| x).collect::<Vec<_>>(),
            ),
            _ => (cfg.train.epochs, Vec::new()),
        };
        let tcfg = super::TrainConfig { epochs, ..cfg.train.clone() };
        let out = train_with_snapshots(model, &train, &tcfg, &cfg.attack, &snaps)?;
        if snaps.is_empty() {
            let t = estimate_risks(&out.model, &train, &test, &cfg.attack)?;
            return Ok(vec![dim_metrics(&t, &bounds)]);
        }
        let mut m = out.model;
        out.snapshots
            .into_iter()
            .map(|(_, p)| {
                m.params = p;
                Ok(dim_metrics(&estimate_risks(&m, &train, &test, &cfg.attack)?, &bounds))
            })
            .collect()
    };
    match inner() {
        Ok(ms) => job.xs.iter().zip(ms).map(|(&(xi, _), m)| (job.family_idx, xi, job.seed, Ok(m))).collect(),
        Err(e) => {
            let msg = e.to_string();
            job.xs
                .iter()
                .map(|&(xi, _)| (job.family_idx, xi, job.seed, Err(msg.clone())))
                .collect()
        }
    }
}

fn axis_values(cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    let v = match cfg.sweep.axis {
        Axis::Dim => cfg.sweep.dims.clone(),
        Axis::Samples | Axis::Epochs => cfg.sweep.values.clone(),
    };
    if v.is_empty() {
        return Err(Error::Config(format!("sweep axis '{}' has no values", cfg.sweep.axis.name())));
    }
    if cfg.sweep.axis != Axis::Epochs && v.contains(&0) {
        return Err(Error::Config("sweep values must be positive".into()));
    }
    let mut sorted = v.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != v.len() {
        return Err(Error::Config("sweep values must be distinct".into()));
    }
    Ok(sorted)
}

impl ExperimentConfig {
    /// Seed of the Monte-Carlo bound estimates.
    pub fn bounds_seed(&self) -> u64 {
        mix_seed(self.task.seed, &[0xb0_0d5])
    }
}

fn check_common(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.sweep.n_seeds == 0 {
        return Err(Error::Config("sweep.n_seeds must be at least 1".into()));
    }
    cfg.train.validate()?;
    cfg.attack.validate()?;
    if cfg.bounds.n_draws == 0 {
        return Err(Error::Config("bounds.n_draws must be at least 1".into()));
    }
    Ok(())
}

fn aggregate_rows(ok: &[&Vec<f64>]) -> (Vec<Cell>, Vec<Cell>) {
    let width = ok.first().map_or(0, |v| v.len());
    let mut means = Vec::new();
    let mut errs = Vec::new();
    for k in 0..width {
        let col: Vec<f64> = ok.iter().map(|v| v[k]).collect();
        let (m, s) = mean_stderr(&col);
        means.push(Cell::Num(m));
        errs.push(Cell::Num(s));
    }
    (means, errs)
}

/// Trains one model per (family, axis value, seed) and tabulates risks and
/// bounds, followed by mean and stderr rows per (family, axis value).
pub fn sweep_dimension(cfg: &ExperimentConfig) -> Result<Table> {
    check_common(cfg)?;
    let xs = axis_values(cfg)?;
    if cfg.sweep.families.is_empty() {
        return Err(Error::Config("sweep.families is empty".into()));
    }
    let mut jobs = Vec::new();
    for (fi, &family) in cfg.sweep.families.iter().enumerate() {
        for s in 0..cfg.sweep.n_seeds {
            match cfg.sweep.axis {
                Axis::Epochs => jobs.push(DimJob {
                    family_idx: fi,
                    family,
                    seed: s,
                    d: cfg.task.d,
                    train_m: cfg.task.train_m,
                    xs: xs.iter().copied().enumerate().collect(),
                }),
                axis => {
                    for (xi, &x) in xs.iter().enumerate() {
                        let (d, train_m) = if axis == Axis::Dim { (x, cfg.task.train_m) } else { (cfg.task.d, x) };
                        jobs.push(DimJob {
                            family_idx: fi,
                            family,
                            seed: s,
                            d,
                            train_m,
                            xs: vec![(xi, x)],
                        });
                    }
                }
            }
        }
    }
    let mut cells: Vec<DimCell> = jobs.par_iter().flat_map_iter(|j| run_dim_job(cfg, j)).collect();
    cells.sort_by_key(|c| (c.0, c.1, c.2));

    let mut table = Table::new(DIM_HEADER.to_vec());
    let axis = cfg.sweep.axis;
    for (fi, &family) in cfg.sweep.families.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let (d, train_m) = match axis {
                Axis::Dim => (x, cfg.task.train_m),
                Axis::Samples => (cfg.task.d, x),
                Axis::Epochs => (cfg.task.d, cfg.task.train_m),
            };
            let lead = |kind: &str, seed: Cell| vec![Cell::text(kind), Cell::text(family.name()), Cell::text(axis.name()), Cell::Int(x as u64), seed];
            let tail = |err: Cell| vec![Cell::Int(d as u64), Cell::Int(train_m as u64), err];
            let group: Vec<&DimCell> = cells.iter().filter(|c| c.0 == fi && c.1 == xi).collect();
            let mut ok = Vec::new();
            for c in &group {
                let mut row = lead(if c.3.is_ok() { "cell" } else { "error" }, Cell::Int(c.2 as u64));
                match &c.3 {
                    Ok(m) => {
                        row.extend(m.values.iter().map(|&v| Cell::Num(v)));
                        row.extend(tail(Cell::Empty));
                        ok.push(&m.values);
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n(Cell::Empty, DIM_HEADER.len() - 8));
                        row.extend(tail(Cell::text(e.clone())));
                    }
                }
                table.push(row);
            }
            let (means, errs) = aggregate_rows(&ok);
            for (kind, vals) in [("mean", means), ("stderr", errs)] {
                let mut row = lead(kind, Cell::Empty);
                if vals.is_empty() {
                    row.extend(std::iter::repeat_n(Cell::Empty, DIM_HEADER.len() - 8));
                } else {
                    row.extend(vals);
                }
                row.extend(tail(Cell::Empty));
                table.push(row);
            }
        }
    }
    Ok(table)
}

const ARMS: [&str; 2] = ["noiseless", "noisy"];

type NoiseCell = (usize, usize, usize, std::result::Result<Vec<f64>, String>);

fn run_noise_job(cfg: &ExperimentConfig, seed: usize, epsilons: &[f64]) -> Vec<NoiseCell> {
    let s = seed as u64;
    let d = cfg.task.d as u64;
    let inner = || -> Result<Vec<Vec<Vec<f64>>>> {
        let task = GaussianTaskSpec {
            seed: mix_seed(cfg.task.seed, &[d, s]),
            ..cfg.task.clone()
        };
        let (train, test) = gen_dataset(&task);
        let clean_spec = EmbeddingSpec {
            depolarize_lambda: 0.0,
            ..cfg.embedding.spec(cfg.task.d)
        };
        // training only ever sees the noiseless states
        let model = build_model(cfg, clean_spec.clone(), mix_seed(cfg.train.seed, &[d, s]))?;
        let train_attack = AttackConfig {
            space: AttackSpace::Quantum,
            epsilon: cfg.sweep.train_epsilon,
            ..cfg.attack.clone()
        };
        let trained = train_with_snapshots(model, &train, &cfg.train, &train_attack, &[])?.model;
        let eval_attack = AttackConfig {
            space: AttackSpace::Quantum,
            ..cfg.attack.clone()
        };
        let (r, p) = (cfg.bounds.r, cfg.attack.p);
        (0..ARMS.len())
            .map(|arm| {
                let model = if arm == 0 {
                    trained.clone()
                } else {
                    let spec = clean_spec.clone().with_depolarizing(cfg.sweep.lambda_min);
                    ClassifierModel::new(
                        Embedding::new(spec)?,
                        trained.params.clone(),
                        trained.measurement(),
                        trained.num_classes(),
                        trained.alpha(),
                        trained.gamma(),
                    )?
                };
                let tables = estimate_risks_grid(&model, &train, &test, &eval_attack, epsilons)?;
                let states = clean_states(&model, &train)?;
                let b = model.observable_norm();
                let d_h = states.hilbert_dim();
                let rc = rc_bound_thm2(&states, r, b)?;
                let mc_seed = mix_seed(cfg.bounds_seed(), &[arm as u64, s]);
                let mc = mc_rc_estimate(&states, &labels(&train), r, b, cfg.bounds.n_draws, mc_seed)?;
                epsilons
                    .iter()
                    .zip(&tables)
                    .map(|(&eps, t)| {
                        let excess = excess_quantum(eps, d_h, r, p);
                        let arc = arc_bound_thm3(rc, b, excess, r, train.len());
                        let upper = if arm == 1 { noisy_bounds_thm4(&states, r, p, b, eps)?.1 } else { f64::NAN };
                        let mut v = risk_values(t).to_vec();
                        v.extend([rc, mc.mean, mc.stderr, excess, arc, upper]);
                        Ok(v)
                    })
                    .collect()
            })
            .collect()
    };
    match inner() {
        Ok(arms) => arms
            .into_iter()
            .enumerate()
            .flat_map(|(arm, rows)| rows.into_iter().enumerate().map(move |(ei, v)| (arm, ei, seed, Ok(v))))
            .collect(),
        Err(e) => {
            let msg = e.to_string();
            (0..ARMS.len())
                .flat_map(|arm| (0..epsilons.len()).map(move |ei| (arm, ei, seed)))
                .map(|(arm, ei, seed)| (arm, ei, seed, Err(msg.clone())))
                .collect()
        }
    }
}

/// One model per seed, trained on noiseless states against the quantum
/// attack at `sweep.train_epsilon`, then evaluated across the ε grid with
/// the noiseless and the depolarized embedding.
pub fn sweep_noise(cfg: &ExperimentConfig) -> Result<Table> {
    check_common(cfg)?;
    let eps = &cfg.sweep.epsilons;
    if eps.is_empty() {
        return Err(Error::Config("sweep.epsilons is empty".into()));
    }
    if eps.windows(2).any(|w| w[1] <= w[0]) || eps[0] < 0.0 {
        return Err(Error::Config("sweep.epsilons must be non-negative and strictly ascending".into()));
    }
    let max_eps = *eps.last().unwrap();
    let lambda = cfg.sweep.lambda_min;
    if !(lambda >= max_eps) {
        return Err(Error::InvalidParameter(format!(
            "minimum eigenvalue floor {lambda} is below the largest budget {max_eps}; the noisy-arm assumption fails"
        )));
    }
    cfg.embedding
        .spec(cfg.task.d)
        .with_depolarizing(lambda)
        .validate(&Default::default())?;

    let mut cells: Vec<NoiseCell> = (0..cfg.sweep.n_seeds)
        .into_par_iter()
        .flat_map_iter(|s| run_noise_job(cfg, s, eps))
        .collect();
    cells.sort_by_key(|c| (c.0, c.1, c.2));

    let width = NOISE_HEADER.len() - 6;
    let mut table = Table::new(NOISE_HEADER.to_vec());
    for (arm, arm_name) in ARMS.iter().enumerate() {
        let lam = if arm == 1 { lambda } else { 0.0 };
        for (ei, &e) in eps.iter().enumerate() {
            let lead = |kind: &str, seed: Cell| vec![Cell::text(kind), Cell::text(*arm_name), Cell::Num(lam), Cell::Num(e), seed];
            let group: Vec<&NoiseCell> = cells.iter().filter(|c| c.0 == arm && c.1 == ei).collect();
            let mut ok = Vec::new();
            for c in &group {
                let mut row = lead(if c.3.is_ok() { "cell" } else { "error" }, Cell::Int(c.2 as u64));
                match &c.3 {
                    Ok(v) => {
                        row.extend(v.iter().map(|&x| opt_num(x)));
                        row.push(Cell::Empty);
                        ok.push(v);
                    }
                    Err(err) => {
                        row.extend(std::iter::repeat_n(Cell::Empty, width));
                        row.push(Cell::text(err.clone()));
                    }
                }
                table.push(row);
            }
            let (means, errs) = aggregate_rows(&ok);
            for (kind, vals) in [("mean", means), ("stderr", errs)] {
                let mut row = lead(kind, Cell::Empty);
                if vals.is_empty() {
                    row.extend(std::iter::repeat_n(Cell::Empty, width));
                } else {
                    row.extend(vals.into_iter().map(|c| match c {
                        Cell::Num(x) => opt_num(x),
                        other => other,
                    }));
                }
                row.push(Cell::Empty);
                table.push(row);
            }
        }
    }
    Ok(table)
}

/// NaN marks a column that does not apply to the row.
fn opt_num(x: f64) -> Cell {
    if x.is_nan() { Cell::Empty } else { Cell::Num(x) }
}

/// Values of a numeric column over the rows of one kind, in row order.
pub fn column_values(table: &Table, kind: &str, filter: impl Fn(&[Cell]) -> bool, column: &str) -> Vec<f64> {
    let kc = table.column("kind").expect("kind column");
    let c = table.column(column).unwrap_or_else(|| panic!("no column {column}"));
    table
        .rows
        .iter()
        .filter(|r| r[kc] == Cell::text(kind) && filter(r))
        .map(|r| match &r[c] {
            Cell::Num(v) => *v,
            Cell::Int(v) => *v as f64,
            _ => f64::NAN,
        })
        .collect()
}
