//! `skelattack attack`: batch attack campaigns over a dataset split.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use crate::commands::parallelism_from_env;
use crate::manifest::{csv_config_line, load_config_file, write_json, Manifest};
use crate::{UsageError, ValidationError};
use skelattack_core::attack::{attack_batch, AttackConfig, BatchItem, TraceEntry};
use skelattack_core::classifier::{
    load_extractor, load_model, ClassifierModel, EmotionExtractor, GroupedEmotionExtractor,
};
use skelattack_core::loss::{ConstraintSpec, LossWeights};
use skelattack_core::metrics::{build_report, BatchReport, ReportContext, SampleMetrics};
use skelattack_core::motion::io::{load_dataset, save_motion, write_atomic};
use skelattack_core::motion::{MotionDataset, SkeletonMotion, Split};

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Config file providing defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// untargeted or targeted.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    target_label: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    conf: Option<f64>,
    /// Loss weights as `wb,wa,ws,we,wl2`.
    #[arg(long)]
    weights: Option<String>,
    /// Shorthand for the C&W-style configuration `0,0,0,0,1`.
    #[arg(long)]
    baseline_l2: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Attack this split (train or test).
    #[arg(long)]
    split: Option<String>,
    /// Attack only the first N samples of the split.
    #[arg(long)]
    limit: Option<usize>,
    /// Record per-iteration traces into traces.json.
    #[arg(long)]
    trace: bool,
    /// Inner Adam steps per dual update.
    #[arg(long)]
    inner_steps: Option<usize>,
    /// Optional relative speed-deviation cap applied after each step.
    #[arg(long)]
    eps_s_cap: Option<f64>,
    /// Attack cleans the victim already misclassifies instead of skipping.
    #[arg(long)]
    force: bool,
    /// Emotion extractor model file; defaults to a seeded stand-in.
    #[arg(long)]
    extractor: Option<PathBuf>,
    /// Seed of the default emotion extractor.
    #[arg(long)]
    emotion_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub mode: String,
    pub target_label: Option<usize>,
    pub gamma: f64,
    pub iters: usize,
    pub lr: f64,
    pub conf: f64,
    pub weights: [f64; 5],
    pub seed: u64,
    pub split: String,
    pub limit: Option<usize>,
    pub trace: bool,
    pub inner_steps: usize,
    pub eps_s_cap: Option<f64>,
    pub force: bool,
    pub extractor: Option<PathBuf>,
    pub emotion_seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    dataset: Option<PathBuf>,
    model: Option<PathBuf>,
    mode: Option<String>,
    target_label: Option<usize>,
    gamma: Option<f64>,
    iters: Option<usize>,
    lr: Option<f64>,
    conf: Option<f64>,
    weights: Option<[f64; 5]>,
    seed: Option<u64>,
    split: Option<String>,
    limit: Option<usize>,
    trace: Option<bool>,
    inner_steps: Option<usize>,
    eps_s_cap: Option<f64>,
    force: Option<bool>,
    extractor: Option<PathBuf>,
    emotion_seed: Option<u64>,
    out: Option<PathBuf>,
}

fn parse_weights(raw: &str) -> Result<[f64; 5]> {
    let parts: Vec<_> = raw.split(',').collect();
    if parts.len() != 5 {
        return Err(UsageError(format!("--weights expects wb,wa,ws,we,wl2, got {raw:?}")).into());
    }
    let mut out = [0.0; 5];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("bad weight {part:?} in --weights")))?;
    }
    Ok(out)
}

fn resolve(args: &Args) -> Result<Config> {
    let file: FileConfig = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FileConfig::default(),
    };
    let weights = if args.baseline_l2 {
        [0.0, 0.0, 0.0, 0.0, 1.0]
    } else {
        match &args.weights {
            Some(raw) => parse_weights(raw)?,
            None => file.weights.unwrap_or([1.0, 1.0, 1.0, 1.0, 0.0]),
        }
    };
    Ok(Config {
        dataset: args
            .dataset
            .clone()
            .or(file.dataset)
            .ok_or_else(|| UsageError("missing --dataset".into()))?,
        model: args
            .model
            .clone()
            .or(file.model)
            .ok_or_else(|| UsageError("missing --model".into()))?,
        mode: args.mode.clone().or(file.mode).unwrap_or_else(|| "untargeted".into()),
        target_label: args.target_label.or(file.target_label),
        gamma: args.gamma.or(file.gamma).unwrap_or(1.0),
        iters: args.iters.or(file.iters).unwrap_or(1000),
        lr: args.lr.or(file.lr).unwrap_or(5e-3),
        conf: args.conf.or(file.conf).unwrap_or(0.0),
        weights,
        seed: args.seed.or(file.seed).unwrap_or(0),
        split: args.split.clone().or(file.split).unwrap_or_else(|| "test".into()),
        limit: args.limit.or(file.limit),
        trace: args.trace || file.trace.unwrap_or(false),
        inner_steps: args.inner_steps.or(file.inner_steps).unwrap_or(1),
        eps_s_cap: args.eps_s_cap.or(file.eps_s_cap),
        force: args.force || file.force.unwrap_or(false),
        extractor: args.extractor.clone().or(file.extractor),
        emotion_seed: args.emotion_seed.or(file.emotion_seed).unwrap_or(7),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("attack-out")),
    })
}

fn base_constraint(config: &Config, class_count: usize) -> Result<ConstraintSpec> {
    match config.mode.as_str() {
        "untargeted" => Ok(ConstraintSpec::untargeted(0, config.conf)?),
        "targeted" => {
            let target = config
                .target_label
                .ok_or_else(|| UsageError("targeted mode requires --target-label".into()))?;
            if target >= class_count {
                return Err(ValidationError(format!(
                    "target label {target} outside [0,{class_count})"
                ))
                .into());
            }
            // Placeholder true label; the batch substitutes each sample's own.
            let placeholder = usize::from(target == 0);
            Ok(ConstraintSpec::targeted(placeholder, target, config.conf)?)
        }
        other => Err(UsageError(format!("unknown --mode {other:?}")).into()),
    }
}

#[derive(Debug, Serialize)]
struct ItemRecord {
    index: usize,
    name: Option<String>,
    true_label: Option<usize>,
    skipped: Option<String>,
    success: Option<bool>,
    predicted_label: Option<usize>,
    iterations_run: Option<usize>,
    first_success_iteration: Option<usize>,
    final_lambda: Option<f64>,
    best_distance: Option<f64>,
    metrics: Option<SampleMetrics>,
}

impl ItemRecord {
    fn from_item(item: &BatchItem) -> Self {
        match &item.outcome {
            Ok(result) => Self {
                index: item.index,
                name: item.name.clone(),
                true_label: item.true_label,
                skipped: None,
                success: Some(result.success),
                predicted_label: Some(result.predicted_label),
                iterations_run: Some(result.iterations_run),
                first_success_iteration: result.first_success_iteration,
                final_lambda: Some(result.final_lambda),
                best_distance: Some(result.best_distance),
                metrics: Some(result.metrics),
            },
            Err(e) => Self {
                index: item.index,
                name: item.name.clone(),
                true_label: item.true_label,
                skipped: Some(e.to_string()),
                success: None,
                predicted_label: None,
                iterations_run: None,
                first_success_iteration: None,
                final_lambda: None,
                best_distance: None,
                metrics: None,
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct ResultsFile<'a> {
    #[serde(flatten)]
    manifest: Manifest<&'a Config>,
    items: Vec<ItemRecord>,
    report: BatchReport,
}

#[derive(Debug, Serialize)]
struct TraceFile<'a> {
    #[serde(flatten)]
    manifest: Manifest<&'a Config>,
    traces: Vec<SampleTrace>,
}

#[derive(Debug, Serialize)]
struct SampleTrace {
    index: usize,
    entries: Vec<TraceEntry>,
}

fn split_samples(dataset: &MotionDataset, config: &Config) -> Result<Vec<SkeletonMotion>> {
    let split = match config.split.as_str() {
        "train" => Split::Train,
        "test" => Split::Test,
        other => return Err(UsageError(format!("unknown --split {other:?}")).into()),
    };
    let mut indices = dataset.indices_of(split);
    if let Some(limit) = config.limit {
        indices.truncate(limit);
    }
    if indices.is_empty() {
        return Err(ValidationError(format!("split {:?} has no samples", config.split)).into());
    }
    Ok(indices.into_iter().map(|i| dataset.motions()[i].clone()).collect())
}

pub fn run(args: Args) -> Result<()> {
    let config = resolve(&args)?;
    let dataset = load_dataset(&config.dataset)?;
    let (model, _) = load_model(&config.model)?;
    if model.class_count() != dataset.class_count() {
        return Err(ValidationError(format!(
            "model has {} classes but dataset has {}",
            model.class_count(),
            dataset.class_count()
        ))
        .into());
    }
    let first = dataset
        .motions()
        .first()
        .ok_or_else(|| ValidationError("dataset is empty".into()))?;
    let shape = (first.frame_count(), first.topology().joint_count());
    if model.input_shape() != shape {
        return Err(ValidationError(format!(
            "model expects {:?} motions but dataset has {:?}",
            model.input_shape(),
            shape
        ))
        .into());
    }
    let extractor: GroupedEmotionExtractor = match &config.extractor {
        Some(path) => {
            let (e, _) = load_extractor(path)?;
            if e.input_shape() != shape {
                return Err(ValidationError(format!(
                    "extractor expects {:?} motions but dataset has {:?}",
                    e.input_shape(),
                    shape
                ))
                .into());
            }
            e
        }
        None => GroupedEmotionExtractor::seeded(shape, config.emotion_seed),
    };

    let samples = split_samples(&dataset, &config)?;
    let mut attack_config = AttackConfig::new(base_constraint(&config, model.class_count())?);
    attack_config.gamma = config.gamma;
    attack_config.max_iterations = config.iters;
    attack_config.learning_rate = config.lr;
    attack_config.weights = LossWeights {
        w_b: config.weights[0],
        w_a: config.weights[1],
        w_s: config.weights[2],
        w_e: config.weights[3],
        w_l2: config.weights[4],
    };
    attack_config.seed = config.seed;
    attack_config.record_trace = config.trace;
    attack_config.inner_steps = config.inner_steps;
    attack_config.eps_s_cap = config.eps_s_cap;
    attack_config.force = config.force;
    attack_config.validate()?;

    let parallelism = parallelism_from_env()?;
    let items = attack_batch(&samples, &model, &extractor, &attack_config, parallelism);

    let out = &config.out;
    std::fs::create_dir_all(out.join("originals"))?;
    std::fs::create_dir_all(out.join("adversarials"))?;
    for (item, original) in items.iter().zip(&samples) {
        let file = format!("{:03}.json", item.index);
        save_motion(original, &out.join("originals").join(&file))?;
        if let Ok(result) = &item.outcome {
            save_motion(&result.adversarial, &out.join("adversarials").join(&file))?;
        }
    }

    let model_id = config
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let sample_metrics: Vec<SampleMetrics> = items
        .iter()
        .filter_map(|item| item.outcome.as_ref().ok().map(|r| r.metrics))
        .collect();
    let report = build_report(
        &sample_metrics,
        &ReportContext { model: model_id, mode: config.mode.clone(), gamma: config.gamma },
    );

    let results = ResultsFile {
        manifest: Manifest::new("attack", &config),
        items: items.iter().map(ItemRecord::from_item).collect(),
        report: report.clone(),
    };
    write_json(&results, &out.join("results.json"))?;

    let csv = format!(
        "{}\n{}\n{}\n",
        csv_config_line("attack", &config)?,
        BatchReport::CSV_HEADER,
        report.csv_row()
    );
    write_atomic(&out.join("report.csv"), csv.as_bytes())?;

    if config.trace {
        let traces: Vec<SampleTrace> = items
            .iter()
            .filter_map(|item| {
                let result = item.outcome.as_ref().ok()?;
                Some(SampleTrace { index: item.index, entries: result.trace.clone()? })
            })
            .collect();
        write_json(&TraceFile { manifest: Manifest::new("attack", &config), traces }, &out.join("traces.json"))?;
    }

    let skipped = items.iter().filter(|i| i.outcome.is_err()).count();
    println!(
        "attacked {} samples ({} skipped) -> {}",
        items.len() - skipped,
        skipped,
        out.display()
    );
    println!("dB/B / dA/A / dS/S / SR / l2: {}", report.table_row());
    Ok(())
}
