//! Datasets of motions sharing one topology, plus min-max normalization.

use std::sync::Arc;

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::motion::{SkeletonMotion, SkeletonTopology};

/// Train/test membership of a dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Per-axis affine map realizing the `[0,1]` coordinate domain:
/// `normalize(p) = (p - offset) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationTransform {
    offset: [f64; 3],
    scale: [f64; 3],
}

impl NormalizationTransform {
    pub fn new(offset: [f64; 3], scale: [f64; 3]) -> Result<Self> {
        if scale.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("normalization scale must be positive".into()));
        }
        if offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidConfig("normalization offset must be finite".into()));
        }
        Ok(Self { offset, scale })
    }

    pub fn identity() -> Self {
        Self { offset: [0.0; 3], scale: [1.0; 3] }
    }

    pub fn offset(&self) -> [f64; 3] {
        self.offset
    }

    pub fn scale(&self) -> [f64; 3] {
        self.scale
    }

    pub fn normalize_positions(&self, positions: &Array3<f64>) -> Array3<f64> {
        let mut out = positions.clone();
        for mut frame in out.outer_iter_mut() {
            for mut joint in frame.outer_iter_mut() {
                for c in 0..3 {
                    joint[c] = (joint[c] - self.offset[c]) / self.scale[c];
                }
            }
        }
        out
    }

    pub fn denormalize_positions(&self, positions: &Array3<f64>) -> Array3<f64> {
        let mut out = positions.clone();
        for mut frame in out.outer_iter_mut() {
            for mut joint in frame.outer_iter_mut() {
                for c in 0..3 {
                    joint[c] = joint[c] * self.scale[c] + self.offset[c];
                }
            }
        }
        out
    }
}

/// Motions over one shared topology with labels, split tags, and the
/// normalization that produced their coordinates.
#[derive(Debug, Clone)]
pub struct MotionDataset {
    motions: Vec<SkeletonMotion>,
    splits: Vec<Split>,
    class_count: usize,
    normalization: NormalizationTransform,
}

impl MotionDataset {
    pub fn new(
        motions: Vec<SkeletonMotion>,
        splits: Vec<Split>,
        class_count: usize,
        normalization: NormalizationTransform,
    ) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::InvalidConfig("class count must be positive".into()));
        }
        if motions.len() != splits.len() {
            return Err(Error::InvalidConfig(format!(
                "{} motions but {} split tags",
                motions.len(),
                splits.len()
            )));
        }
        if let Some(first) = motions.first() {
            let topo = first.topology();
            for (i, m) in motions.iter().enumerate() {
                if !Arc::ptr_eq(m.topology(), topo) && m.topology().as_ref() != topo.as_ref() {
                    return Err(Error::InvalidMotion(format!(
                        "motion {i} does not share the dataset topology"
                    )));
                }
                match m.label() {
                    Some(l) if l < class_count => {}
                    Some(l) => {
                        return Err(Error::InvalidMotion(format!(
                            "motion {i} label {l} outside [0,{class_count})"
                        )))
                    }
                    None => {
                        return Err(Error::InvalidMotion(format!("motion {i} has no label")))
                    }
                }
            }
        }
        Ok(Self { motions, splits, class_count, normalization })
    }

    pub fn motions(&self) -> &[SkeletonMotion] {
        &self.motions
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn normalization(&self) -> &NormalizationTransform {
        &self.normalization
    }

    pub fn topology(&self) -> Option<&Arc<SkeletonTopology>> {
        self.motions.first().map(|m| m.topology())
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        self.splits
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == split).then_some(i))
            .collect()
    }
}

/// Applies one dataset-level per-axis min-max transform so every coordinate
/// lands in `[0,1]`. A degenerate axis (max = min) gets scale 1 and maps to 0.
///
/// The input is expected raw (identity normalization); the returned dataset
/// stores the computed transform for round-tripping.
pub fn normalize_dataset(dataset: &MotionDataset) -> Result<(MotionDataset, NormalizationTransform)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("cannot normalize an empty dataset".into()));
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for m in dataset.motions() {
        for frame in m.positions().outer_iter() {
            for joint in frame.outer_iter() {
                for c in 0..3 {
                    min[c] = min[c].min(joint[c]);
                    max[c] = max[c].max(joint[c]);
                }
            }
        }
    }
    let mut offset = [0.0; 3];
    let mut scale = [1.0; 3];
    for c in 0..3 {
        offset[c] = min[c];
        let span = max[c] - min[c];
        scale[c] = if span > 0.0 { span } else { 1.0 };
    }
    let transform = NormalizationTransform::new(offset, scale)?;
    let motions = dataset
        .motions()
        .iter()
        .map(|m| m.with_positions(transform.normalize_positions(m.positions())))
        .collect::<Result<Vec<_>>>()?;
    let out = MotionDataset::new(
        motions,
        dataset.splits().to_vec(),
        dataset.class_count(),
        transform.clone(),
    )?;
    Ok((out, transform))
}
