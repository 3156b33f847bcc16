//! `skelattack export-overlay`: per-frame joint coordinates of a result
//! pair plus displacement magnitudes, for external plotting.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use crate::manifest::{csv_config_line, load_config_file, write_json, Manifest};
use crate::{UsageError, ValidationError};
use skelattack_core::motion::io::{load_motion, write_atomic};

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Config file providing defaults for any flag (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long)]
    adversarial: Option<PathBuf>,
    /// Export this many evenly spaced frames (default: all).
    #[arg(long)]
    sample_frames: Option<usize>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Config {
    pub original: PathBuf,
    pub adversarial: PathBuf,
    pub sample_frames: Option<usize>,
    pub format: String,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    original: Option<PathBuf>,
    adversarial: Option<PathBuf>,
    sample_frames: Option<usize>,
    format: Option<String>,
    out: Option<PathBuf>,
}

fn resolve(args: &Args) -> Result<Config> {
    let file: FileConfig = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FileConfig::default(),
    };
    Ok(Config {
        original: args
            .original
            .clone()
            .or(file.original)
            .ok_or_else(|| UsageError("missing --original".into()))?,
        adversarial: args
            .adversarial
            .clone()
            .or(file.adversarial)
            .ok_or_else(|| UsageError("missing --adversarial".into()))?,
        sample_frames: args.sample_frames.or(file.sample_frames),
        format: args.format.clone().or(file.format).unwrap_or_else(|| "csv".into()),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("overlay.csv")),
    })
}

/// `count` evenly spaced frame indices over `[0, frames)`.
fn sampled_frames(frames: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    if count >= frames {
        return (0..frames).collect();
    }
    if count == 1 {
        return vec![0];
    }
    let mut indices: Vec<usize> = (0..count)
        .map(|i| ((i * (frames - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    indices.dedup();
    indices
}

#[derive(Debug, Serialize)]
struct OverlayRow {
    frame: usize,
    joint: usize,
    ox: f64,
    oy: f64,
    oz: f64,
    ax: f64,
    ay: f64,
    az: f64,
    displacement: f64,
}

#[derive(Debug, Serialize)]
struct OverlayFile<'a> {
    #[serde(flatten)]
    manifest: Manifest<&'a Config>,
    rows: Vec<OverlayRow>,
}

pub fn run(args: Args) -> Result<()> {
    let config = resolve(&args)?;
    let original = load_motion(&config.original)?;
    let adversarial = load_motion(&config.adversarial)?;
    if original.topology().as_ref() != adversarial.topology().as_ref()
        || original.frame_count() != adversarial.frame_count()
    {
        return Err(ValidationError("pair does not share topology and frame count".into()).into());
    }

    let frames = original.frame_count();
    let selected = sampled_frames(frames, config.sample_frames.unwrap_or(frames));
    let po = original.positions();
    let pa = adversarial.positions();
    let joints = original.topology().joint_count();
    let mut rows = Vec::with_capacity(selected.len() * joints);
    for &t in &selected {
        for j in 0..joints {
            let o = [po[[t, j, 0]], po[[t, j, 1]], po[[t, j, 2]]];
            let a = [pa[[t, j, 0]], pa[[t, j, 1]], pa[[t, j, 2]]];
            let displacement = ((o[0] - a[0]).powi(2) + (o[1] - a[1]).powi(2) + (o[2] - a[2]).powi(2)).sqrt();
            rows.push(OverlayRow {
                frame: t,
                joint: j,
                ox: o[0],
                oy: o[1],
                oz: o[2],
                ax: a[0],
                ay: a[1],
                az: a[2],
                displacement,
            });
        }
    }

    if let Some(dir) = config.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    match config.format.as_str() {
        "json" => {
            write_json(&OverlayFile { manifest: Manifest::new("export-overlay", &config), rows }, &config.out)?;
        }
        "csv" => {
            let mut csv = format!(
                "{}\nframe,joint,ox,oy,oz,ax,ay,az,displacement\n",
                csv_config_line("export-overlay", &config)?
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.frame, r.joint, r.ox, r.oy, r.oz, r.ax, r.ay, r.az, r.displacement
                ));
            }
            write_atomic(&config.out, csv.as_bytes())?;
        }
        other => return Err(UsageError(format!("unknown --format {other:?}")).into()),
    }
    println!(
        "exported {} frames x {} joints -> {}",
        selected.len(),
        joints,
        config.out.display()
    );
    Ok(())
}
