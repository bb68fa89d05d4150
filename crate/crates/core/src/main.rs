use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use qadvlab::attacks::attack_sample;
use qadvlab::bounds::Variant;
use qadvlab::embeddings::Embedding;
use qadvlab::error::{Error, Result};
use qadvlab::experiments::csv::Table;
use qadvlab::experiments::report::{bounds_table, initial_model, train_run};
use qadvlab::experiments::{sweep_dimension, sweep_noise, thread_pool, Axis, ExperimentConfig};
use qadvlab::model::{ClassifierModel, ModelCheckpoint};

#[derive(Parser, Debug)]
#[command(name = "qadvlab", version, about = "Adversarial robustness experiments for quantum classifiers")]
struct Cli {
    /// JSON experiment config; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Excess-constant variant: prop1 or appendix.
    #[arg(long, global = true)]
    variant: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the embedded density matrix of one feature vector as JSON.
    Embed {
        /// Comma-separated features.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Adversarially train on the configured task.
    Train {
        /// Also write the trained model as JSON.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Attack a single sample and report the losses as JSON.
    Attack {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 0)]
        y: usize,
        /// Model to attack; the seeded initial model otherwise.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate the configured bounds, one CSV row per theorem.
    Bounds,
    /// Sweep over dimension, training-set size or epochs.
    SweepDim {
        /// dim, samples or epochs.
        #[arg(long)]
        axis: Option<String>,
    },
    /// Noiseless vs depolarized embedding over the epsilon grid.
    SweepNoise,
    /// Run the built-in invariant checks.
    Selftest,
}

fn parse_features(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse feature '{t}'")))
        })
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.write(p),
        None => {
            print!("{}", table.to_csv());
            Ok(())
        }
    }
}

fn load_model(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<ClassifierModel> {
    match checkpoint {
        Some(p) => ClassifierModel::from_checkpoint(&read_json::<ModelCheckpoint>(p)?),
        None => initial_model(cfg),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.reseed(s);
    }
    if let Some(v) = &cli.variant {
        cfg.bounds.variant = v.parse::<Variant>()?;
    }
    let out = cli.out.as_deref();
    let pool = thread_pool()?;
    match cli.command {
        Command::Embed { x } => {
            let x = parse_features(&x)?;
            let e = Embedding::new(cfg.embedding.spec(x.len()))?;
            let rho = e.embed(&x)?;
            let n = rho.dim();
            let m = rho.as_matrix();
            let part = |f: fn(&qadvlab::qmath::C64) -> f64| -> Vec<Vec<f64>> {
                (0..n).map(|i| (0..n).map(|j| f(&m.data()[i * n + j])).collect()).collect()
            };
            let doc = json!({
                "family": e.spec().family.name(),
                "n_qubits": e.n_qubits(),
                "hilbert_dim": n,
                "re": part(|c| c.re),
                "im": part(|c| c.im),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Command::Train { checkpoint } => {
            let (outcome, risks) = pool.install(|| train_run(&cfg))?;
            if let Some(p) = checkpoint {
                let text = serde_json::to_string_pretty(&outcome.model.checkpoint()).expect("json");
                write_text(&p, &text)?;
            }
            let mut t = Table::new(vec!["epoch", "adv_empirical_risk"]);
            for (i, r) in outcome.trace.iter().chain([&outcome.final_risk]).enumerate() {
                t.push(vec![qadvlab::experiments::csv::Cell::Int(i as u64), (*r).into()]);
            }
            match out {
                Some(p) => {
                    t.write(p)?;
                    println!("{}", serde_json::to_string_pretty(&risks).expect("json"));
                }
                None => {
                    eprintln!("{}", serde_json::to_string(&risks).expect("json"));
                    print!("{}", t.to_csv());
                }
            }
        }
        Command::Attack { x, y, checkpoint } => {
            let x = parse_features(&x)?;
            let model = load_model(&cfg, checkpoint.as_deref())?;
            let o = attack_sample(&model, &x, y, &cfg.attack)?;
            let doc = json!({
                "clean_loss": o.clean_loss,
                "adversarial_loss": o.loss,
                "rejected": o.rejected,
                "x_adv": o.x_adv,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Command::Bounds => emit(&bounds_table(&cfg)?, out)?,
        Command::SweepDim { axis } => {
            if let Some(a) = axis {
                cfg.sweep.axis = a.parse::<Axis>()?;
            }
            emit(&pool.install(|| sweep_dimension(&cfg))?, out)?;
        }
        Command::SweepNoise => emit(&pool.install(|| sweep_noise(&cfg))?, out)?,
        Command::Selftest => {
            let checks = pool.install(qadvlab::selftest::run);
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
