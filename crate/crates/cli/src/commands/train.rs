//! `skelattack train`: victim training with an accuracy gate.

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use crate::manifest::{load_config_file, write_json, Manifest};
use crate::UsageError;
use skelattack_core::classifier::{save_model, train_classifier, Architecture};
use skelattack_core::motion::io::load_dataset;

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Config file providing defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Victim architecture: mlp or linear.
    #[arg(long)]
    arch: Option<String>,
    /// Hidden layer widths for the MLP, as `H1,H2`.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Output model path; the accuracy report lands next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse to emit a victim below this test accuracy.
    #[arg(long)]
    min_accuracy: Option<f64>,
    /// Emit the model even below the accuracy gate.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Config {
    pub dataset: PathBuf,
    pub arch: String,
    pub hidden: (usize, usize),
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub out: PathBuf,
    pub min_accuracy: f64,
    pub force: bool,
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    dataset: Option<PathBuf>,
    arch: Option<String>,
    hidden: Option<(usize, usize)>,
    seed: Option<u64>,
    epochs: Option<usize>,
    lr: Option<f64>,
    out: Option<PathBuf>,
    min_accuracy: Option<f64>,
    force: Option<bool>,
}

fn parse_hidden(raw: &str) -> Result<(usize, usize)> {
    let parts: Vec<_> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(UsageError(format!("--hidden expects H1,H2, got {raw:?}")).into());
    }
    let h1 = parts[0].trim().parse().map_err(|_| UsageError(format!("bad width {:?}", parts[0])))?;
    let h2 = parts[1].trim().parse().map_err(|_| UsageError(format!("bad width {:?}", parts[1])))?;
    Ok((h1, h2))
}

fn resolve(args: &Args) -> Result<Config> {
    let file: FileConfig = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FileConfig::default(),
    };
    let hidden = match &args.hidden {
        Some(raw) => parse_hidden(raw)?,
        None => file.hidden.unwrap_or((64, 64)),
    };
    Ok(Config {
        dataset: args
            .dataset
            .clone()
            .or(file.dataset)
            .ok_or_else(|| UsageError("missing --dataset".into()))?,
        arch: args.arch.clone().or(file.arch).unwrap_or_else(|| "mlp".into()),
        hidden,
        seed: args.seed.or(file.seed).unwrap_or(0),
        epochs: args.epochs.or(file.epochs).unwrap_or(200),
        lr: args.lr.or(file.lr).unwrap_or(1e-3),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("model.json")),
        min_accuracy: args.min_accuracy.or(file.min_accuracy).unwrap_or(0.85),
        force: args.force || file.force.unwrap_or(false),
    })
}

#[derive(Debug, Serialize)]
struct AccuracyReport<'a> {
    #[serde(flatten)]
    manifest: Manifest<&'a Config>,
    train_accuracy: f64,
    test_accuracy: Option<f64>,
    initial_loss: f64,
    final_loss: f64,
    epochs: usize,
}

pub fn run(args: Args) -> Result<()> {
    let config = resolve(&args)?;
    let architecture = match config.arch.as_str() {
        "mlp" => Architecture::Mlp { hidden: config.hidden },
        "linear" => Architecture::Linear,
        other => return Err(UsageError(format!("unknown --arch {other:?}")).into()),
    };
    let dataset = load_dataset(&config.dataset)?;
    let (model, report) =
        train_classifier(&dataset, architecture, config.seed, config.epochs, config.lr)?;

    // Gate on test accuracy; fall back to train accuracy without a test split.
    let gate_accuracy = report.test_accuracy.unwrap_or(report.train_accuracy);
    if gate_accuracy < config.min_accuracy && !config.force {
        return Err(anyhow!(
            "victim accuracy {gate_accuracy:.3} below the {:.3} gate; rerun with --force to emit anyway",
            config.min_accuracy
        ));
    }

    if let Some(dir) = config.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_model(&model, config.seed, &config.out)?;
    let stem = config.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let report_path = config.out.with_file_name(format!("{stem}.report.json"));
    write_json(
        &AccuracyReport {
            manifest: Manifest::new("train", &config),
            train_accuracy: report.train_accuracy,
            test_accuracy: report.test_accuracy,
            initial_loss: report.initial_loss(),
            final_loss: report.final_loss(),
            epochs: report.epochs,
        },
        &report_path,
    )?;
    println!(
        "trained {} (train acc {:.3}, test acc {}) -> {}",
        config.arch,
        report.train_accuracy,
        report
            .test_accuracy
            .map(|a| format!("{a:.3}"))
            .unwrap_or_else(|| "n/a".into()),
        config.out.display()
    );
    Ok(())
}
