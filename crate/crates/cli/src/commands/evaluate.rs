//! `skelattack evaluate`: metrics recomputed from stored pairs, independent
//! of any attack-time records.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use crate::manifest::{csv_config_line, load_config_file, write_json, Manifest};
use crate::{UsageError, ValidationError};
use skelattack_core::classifier::{load_model, ClassifierModel};
use skelattack_core::metrics::{build_report, BatchReport, ReportContext, SampleMetrics};
use skelattack_core::motion::io::{load_motion, write_atomic};
use skelattack_core::motion::SkeletonMotion;

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Config file providing defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of original motion files.
    #[arg(long)]
    originals: Option<PathBuf>,
    /// Directory of adversarial motion files (matched by file name).
    #[arg(long)]
    adversarials: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// untargeted or targeted; determines what counts as success.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    target_label: Option<usize>,
    /// Gamma echoed into the report row.
    #[arg(long)]
    gamma: Option<f64>,
    /// Output report path (JSON; a CSV lands next to it).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Config {
    pub originals: PathBuf,
    pub adversarials: PathBuf,
    pub model: PathBuf,
    pub mode: String,
    pub target_label: Option<usize>,
    pub gamma: f64,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    originals: Option<PathBuf>,
    adversarials: Option<PathBuf>,
    model: Option<PathBuf>,
    mode: Option<String>,
    target_label: Option<usize>,
    gamma: Option<f64>,
    out: Option<PathBuf>,
}

fn resolve(args: &Args) -> Result<Config> {
    let file: FileConfig = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FileConfig::default(),
    };
    Ok(Config {
        originals: args
            .originals
            .clone()
            .or(file.originals)
            .ok_or_else(|| UsageError("missing --originals".into()))?,
        adversarials: args
            .adversarials
            .clone()
            .or(file.adversarials)
            .ok_or_else(|| UsageError("missing --adversarials".into()))?,
        model: args
            .model
            .clone()
            .or(file.model)
            .ok_or_else(|| UsageError("missing --model".into()))?,
        mode: args.mode.clone().or(file.mode).unwrap_or_else(|| "untargeted".into()),
        target_label: args.target_label.or(file.target_label),
        gamma: args.gamma.or(file.gamma).unwrap_or(0.0),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("evaluation.json")),
    })
}

fn sorted_motion_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ValidationError(format!("no motion files in {}", dir.display())).into());
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct EvaluationFile<'a> {
    #[serde(flatten)]
    manifest: Manifest<&'a Config>,
    per_sample: Vec<PerSample>,
    report: BatchReport,
}

#[derive(Debug, Serialize)]
struct PerSample {
    file: String,
    true_label: Option<usize>,
    predicted_label: usize,
    metrics: SampleMetrics,
}

pub fn run(args: Args) -> Result<()> {
    let config = resolve(&args)?;
    let (model, _) = load_model(&config.model)?;
    if config.mode == "targeted" && config.target_label.is_none() {
        return Err(UsageError("targeted mode requires --target-label".into()).into());
    }
    let orig_files = sorted_motion_files(&config.originals)?;

    let mut per_sample = Vec::with_capacity(orig_files.len());
    let mut sample_metrics = Vec::with_capacity(orig_files.len());
    for orig_path in &orig_files {
        let file_name = orig_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let adv_path = config.adversarials.join(&file_name);
        if !adv_path.exists() {
            return Err(ValidationError(format!(
                "pair mismatch: {} has no counterpart in {}",
                file_name,
                config.adversarials.display()
            ))
            .into());
        }
        let original: SkeletonMotion = load_motion(orig_path)?;
        let adversarial = load_motion(&adv_path)?;
        if original.topology().as_ref() != adversarial.topology().as_ref() {
            return Err(ValidationError(format!("pair {file_name} mixes topologies")).into());
        }
        let predicted = model.forward(&adversarial)?.argmax();
        let success = match config.mode.as_str() {
            "untargeted" => {
                let label = original.label().ok_or_else(|| {
                    ValidationError(format!("original {file_name} has no label"))
                })?;
                predicted != label
            }
            "targeted" => Some(predicted) == config.target_label,
            other => return Err(UsageError(format!("unknown --mode {other:?}")).into()),
        };
        let metrics = SampleMetrics::measure(&original, &adversarial, success)?;
        sample_metrics.push(metrics);
        per_sample.push(PerSample {
            file: file_name,
            true_label: original.label(),
            predicted_label: predicted,
            metrics,
        });
    }

    let model_id = config
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let report = build_report(
        &sample_metrics,
        &ReportContext { model: model_id, mode: config.mode.clone(), gamma: config.gamma },
    );

    if let Some(dir) = config.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_json(
        &EvaluationFile { manifest: Manifest::new("evaluate", &config), per_sample, report: report.clone() },
        &config.out,
    )?;
    let stem = config.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let csv_path = config.out.with_file_name(format!("{stem}.csv"));
    let csv = format!(
        "{}\n{}\n{}\n",
        csv_config_line("evaluate", &config)?,
        BatchReport::CSV_HEADER,
        report.csv_row()
    );
    write_atomic(&csv_path, csv.as_bytes())?;
    println!("evaluated {} pairs -> {}", report.n, config.out.display());
    println!("dB/B / dA/A / dS/S / SR / l2: {}", report.table_row());
    Ok(())
}
