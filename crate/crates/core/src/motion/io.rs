//! JSON file formats for motions and datasets.
//!
//! Motion files carry `name`, `label`, `joints`, `frames`, `bones` and a
//! `frames x joints x 3` nested `positions` array. Dataset files wrap a list
//! of motions with the class count, the normalization transform and split
//! tags. Floats round-trip exactly (shortest representation that re-parses to
//! the same double).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{
    Bone, MotionDataset, NormalizationTransform, SkeletonMotion, SkeletonTopology, Split,
};

#[derive(Serialize, Deserialize)]
struct MotionFile {
    name: Option<String>,
    label: Option<usize>,
    joints: usize,
    frames: usize,
    bones: Vec<Bone>,
    positions: Vec<Vec<[f64; 3]>>,
}

#[derive(Serialize, Deserialize)]
struct NormalizationFile {
    offset: [f64; 3],
    scale: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    class_count: usize,
    normalization: NormalizationFile,
    motions: Vec<MotionFile>,
    /// Parallel to `motions`; absent means all-train.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    splits: Option<Vec<String>>,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.into() }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

/// Write-temp-then-rename so partially written files are never observed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| parse_err(path, "path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = match dir {
        Some(d) => d.join(format!(".{file_name}.tmp")),
        None => Path::new(&format!(".{file_name}.tmp")).to_path_buf(),
    };
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn motion_to_file(motion: &SkeletonMotion) -> MotionFile {
    let pos = motion.positions();
    let (t_count, j_count, _) = pos.dim();
    let positions = (0..t_count)
        .map(|t| {
            (0..j_count)
                .map(|j| [pos[[t, j, 0]], pos[[t, j, 1]], pos[[t, j, 2]]])
                .collect()
        })
        .collect();
    MotionFile {
        name: motion.name().map(str::to_owned),
        label: motion.label(),
        joints: j_count,
        frames: t_count,
        bones: motion.topology().bones().to_vec(),
        positions,
    }
}

fn motion_from_file(file: MotionFile, path: &Path) -> Result<SkeletonMotion> {
    let topology = SkeletonTopology::new(file.joints, file.bones.clone())
        .map_err(|e| parse_err(path, e.to_string()))?;
    motion_from_file_with_topology(file, Arc::new(topology), path)
}

fn motion_from_file_with_topology(
    file: MotionFile,
    topology: Arc<SkeletonTopology>,
    path: &Path,
) -> Result<SkeletonMotion> {
    if file.positions.len() != file.frames {
        return Err(parse_err(
            path,
            format!(
                "frame count mismatch: frames field {} but {} position rows",
                file.frames,
                file.positions.len()
            ),
        ));
    }
    let mut pos = ndarray::Array3::zeros((file.frames, file.joints, 3));
    for (t, frame) in file.positions.iter().enumerate() {
        if frame.len() != file.joints {
            return Err(parse_err(
                path,
                format!(
                    "joint count mismatch in frame {t}: joints field {} but {} rows",
                    file.joints,
                    frame.len()
                ),
            ));
        }
        for (j, p) in frame.iter().enumerate() {
            for c in 0..3 {
                pos[[t, j, c]] = p[c];
            }
        }
    }
    SkeletonMotion::new(topology, pos, file.label, file.name)
        .map_err(|e| parse_err(path, e.to_string()))
}

pub fn save_motion(motion: &SkeletonMotion, path: &Path) -> Result<()> {
    let file = motion_to_file(motion);
    let mut bytes = serde_json::to_vec(&file).map_err(|e| parse_err(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn load_motion(path: &Path) -> Result<SkeletonMotion> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let file: MotionFile =
        serde_json::from_slice(&bytes).map_err(|e| parse_err(path, e.to_string()))?;
    motion_from_file(file, path)
}

pub fn save_dataset(dataset: &MotionDataset, path: &Path) -> Result<()> {
    let file = DatasetFile {
        class_count: dataset.class_count(),
        normalization: NormalizationFile {
            offset: dataset.normalization().offset(),
            scale: dataset.normalization().scale(),
        },
        motions: dataset.motions().iter().map(motion_to_file).collect(),
        splits: Some(
            dataset
                .splits()
                .iter()
                .map(|s| match s {
                    Split::Train => "train".to_owned(),
                    Split::Test => "test".to_owned(),
                })
                .collect(),
        ),
    };
    let mut bytes = serde_json::to_vec(&file).map_err(|e| parse_err(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn load_dataset(path: &Path) -> Result<MotionDataset> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let file: DatasetFile =
        serde_json::from_slice(&bytes).map_err(|e| parse_err(path, e.to_string()))?;
    let normalization = NormalizationTransform::new(file.normalization.offset, file.normalization.scale)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let splits = match &file.splits {
        Some(tags) => {
            if tags.len() != file.motions.len() {
                return Err(parse_err(
                    path,
                    format!("{} split tags for {} motions", tags.len(), file.motions.len()),
                ));
            }
            tags.iter()
                .map(|t| match t.as_str() {
                    "train" => Ok(Split::Train),
                    "test" => Ok(Split::Test),
                    other => Err(parse_err(path, format!("unknown split tag {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![Split::Train; file.motions.len()],
    };

    // All motions share one topology instance.
    let mut shared: Option<Arc<SkeletonTopology>> = None;
    let mut motions = Vec::with_capacity(file.motions.len());
    for (i, mf) in file.motions.into_iter().enumerate() {
        let topology = SkeletonTopology::new(mf.joints, mf.bones.clone())
            .map_err(|e| parse_err(path, format!("motion {i}: {e}")))?;
        let arc = match &shared {
            None => {
                let arc = Arc::new(topology);
                shared = Some(arc.clone());
                arc
            }
            Some(existing) => {
                if existing.as_ref() != &topology {
                    return Err(parse_err(
                        path,
                        format!("motion {i} does not share the dataset topology"),
                    ));
                }
                existing.clone()
            }
        };
        motions.push(
            motion_from_file_with_topology(mf, arc, path)
                .map_err(|e| match e {
                    Error::Parse { message, .. } => parse_err(path, format!("motion {i}: {message}")),
                    other => other,
                })?,
        );
    }
    MotionDataset::new(motions, splits, file.class_count, normalization)
        .map_err(|e| parse_err(path, e.to_string()))
}
