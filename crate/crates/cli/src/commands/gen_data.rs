//! `skelattack gen-data`: seeded synthetic dataset generation.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use crate::commands::parse_topology;
use crate::manifest::{load_config_file, write_json, Manifest};
use crate::UsageError;
use skelattack_core::motion::{
    generate_synthetic_dataset, io::save_dataset, Split, SyntheticSpec,
};

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Config file providing defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset; `paper-desk` = chain16, 32 frames, 5 classes, 100/class.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of action classes.
    #[arg(long)]
    classes: Option<usize>,
    /// Samples per class (every fifth is tagged test).
    #[arg(long)]
    per_class: Option<usize>,
    /// Frames per motion.
    #[arg(long)]
    frames: Option<usize>,
    /// Topology family: chain<N> or star<N>.
    #[arg(long)]
    topology: Option<String>,
    /// Output dataset path; the manifest lands next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fully resolved configuration, echoed into the manifest.
#[derive(Debug, Serialize, Deserialize)]
pub struct Config {
    pub seed: u64,
    pub classes: usize,
    pub per_class: usize,
    pub frames: usize,
    pub topology: String,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    seed: Option<u64>,
    classes: Option<usize>,
    per_class: Option<usize>,
    frames: Option<usize>,
    topology: Option<String>,
    out: Option<PathBuf>,
}

struct Preset {
    classes: usize,
    per_class: usize,
    frames: usize,
    topology: &'static str,
}

fn preset(name: &str) -> Result<Preset> {
    match name {
        "paper-desk" => Ok(Preset { classes: 5, per_class: 100, frames: 32, topology: "chain16" }),
        other => Err(UsageError(format!("unknown preset {other:?}")).into()),
    }
}

fn resolve(args: &Args) -> Result<Config> {
    let file: FileConfig = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FileConfig::default(),
    };
    let preset = args.preset.as_deref().map(preset).transpose()?;
    let need = |flag: &str| UsageError(format!("missing --{flag} (no preset or config supplies it)"));
    Ok(Config {
        seed: args.seed.or(file.seed).unwrap_or(0),
        classes: args
            .classes
            .or(file.classes)
            .or(preset.as_ref().map(|p| p.classes))
            .ok_or_else(|| need("classes"))?,
        per_class: args
            .per_class
            .or(file.per_class)
            .or(preset.as_ref().map(|p| p.per_class))
            .ok_or_else(|| need("per-class"))?,
        frames: args
            .frames
            .or(file.frames)
            .or(preset.as_ref().map(|p| p.frames))
            .ok_or_else(|| need("frames"))?,
        topology: args
            .topology
            .clone()
            .or(file.topology)
            .or(preset.as_ref().map(|p| p.topology.to_owned()))
            .ok_or_else(|| need("topology"))?,
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("dataset.json")),
    })
}

fn manifest_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}

pub fn run(args: Args) -> Result<()> {
    let config = resolve(&args)?;
    let topology = parse_topology(&config.topology)?;
    let dataset = generate_synthetic_dataset(&SyntheticSpec {
        seed: config.seed,
        class_count: config.classes,
        samples_per_class: config.per_class,
        frame_count: config.frames,
        topology,
    })?;
    if let Some(dir) = config.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_dataset(&dataset, &config.out)?;
    let train = dataset.indices_of(Split::Train).len();
    let test = dataset.indices_of(Split::Test).len();
    write_json(&Manifest::new("gen-data", &config), &manifest_path(&config.out))?;
    println!(
        "wrote {} motions ({train} train / {test} test, {} classes) to {}",
        dataset.len(),
        dataset.class_count(),
        config.out.display()
    );
    Ok(())
}
