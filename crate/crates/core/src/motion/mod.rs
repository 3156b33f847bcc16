//! Skeleton data model: topology, motions, datasets and their dynamics.
//!
//! A motion is a `T x J x 3` array of joint coordinates over a fixed bone
//! topology. Everything in this module is immutable after construction and
//! safe to share across threads.

mod dataset;
mod dynamics;
pub mod io;
mod synthetic;

pub use dataset::{normalize_dataset, MotionDataset, NormalizationTransform, Split};
pub use dynamics::{bone_angles, bone_angles_with_flags, bone_lengths, joint_speeds};
pub use synthetic::{generate_synthetic_dataset, SyntheticSpec};

use std::sync::Arc;

use ndarray::Array3;

use crate::error::{Error, Result};

/// Dot-product clamp for angle computation: cosines are restricted to
/// `[-1 + COS_CLAMP, 1 - COS_CLAMP]` so the arccos derivative stays bounded.
pub const COS_CLAMP: f64 = 1e-6;

/// Bones shorter than this (normalized units) have no usable direction;
/// their angles are defined as 0 and flagged.
pub const MIN_BONE_LEN: f64 = 1e-8;

/// A bone as a `(source_joint, target_joint)` index pair.
pub type Bone = (usize, usize);

/// Joint count, bone list, and the derived list of angle-forming bone pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTopology {
    joint_count: usize,
    bones: Vec<Bone>,
    angle_pairs: Vec<(usize, usize)>,
}

impl SkeletonTopology {
    /// Validates the bone list and derives the canonical angle pairs.
    pub fn new(joint_count: usize, bones: Vec<Bone>) -> Result<Self> {
        if joint_count == 0 {
            return Err(Error::InvalidTopology("joint count must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, &(s, t)) in bones.iter().enumerate() {
            if s >= joint_count || t >= joint_count {
                return Err(Error::InvalidTopology(format!(
                    "bone {i} ({s},{t}) references a joint outside [0,{joint_count})"
                )));
            }
            if s == t {
                return Err(Error::InvalidTopology(format!(
                    "self-loop bone {i} at joint {s}"
                )));
            }
            if !seen.insert((s.min(t), s.max(t))) {
                return Err(Error::InvalidTopology(format!("duplicate bone {i} ({s},{t})")));
            }
        }
        let angle_pairs = derive_angle_pairs(&bones);
        Ok(Self { joint_count, bones, angle_pairs })
    }

    /// A chain of `joint_count` joints: bones `(0,1), (1,2), ...`.
    pub fn chain(joint_count: usize) -> Result<Self> {
        let bones = (0..joint_count.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        Self::new(joint_count, bones)
    }

    /// A star: joint 0 is the hub, every other joint hangs off it.
    pub fn star(joint_count: usize) -> Result<Self> {
        let bones = (1..joint_count).map(|j| (0, j)).collect();
        Self::new(joint_count, bones)
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }

    /// Bone pairs sharing exactly one joint, in canonical order.
    pub fn angle_pairs(&self) -> &[(usize, usize)] {
        &self.angle_pairs
    }

    /// For angle pair `k`: `(shared_joint, outer_joint_of_bone_i, outer_joint_of_bone_j)`.
    pub(crate) fn angle_joints(&self, pair: (usize, usize)) -> (usize, usize, usize) {
        let (bi, bj) = pair;
        let (a, b) = self.bones[bi];
        let (c, d) = self.bones[bj];
        if a == c {
            (a, b, d)
        } else if a == d {
            (a, b, c)
        } else if b == c {
            (b, a, d)
        } else {
            (b, a, c)
        }
    }
}

/// Every unordered pair of distinct bones sharing exactly one joint, each
/// exactly once, sorted lexicographically by bone index.
pub fn derive_angle_pairs(bones: &[Bone]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..bones.len() {
        for j in (i + 1)..bones.len() {
            let (a, b) = bones[i];
            let (c, d) = bones[j];
            let shared = [a == c, a == d, b == c, b == d].iter().filter(|&&x| x).count();
            if shared == 1 {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// A skeletal motion: `T x J x 3` joint coordinates over a shared topology.
#[derive(Debug, Clone)]
pub struct SkeletonMotion {
    topology: Arc<SkeletonTopology>,
    positions: Array3<f64>,
    label: Option<usize>,
    name: Option<String>,
}

impl SkeletonMotion {
    pub fn new(
        topology: Arc<SkeletonTopology>,
        positions: Array3<f64>,
        label: Option<usize>,
        name: Option<String>,
    ) -> Result<Self> {
        let (t, j, c) = positions.dim();
        if t == 0 {
            return Err(Error::InvalidMotion("frame count must be positive".into()));
        }
        if j != topology.joint_count() || c != 3 {
            return Err(Error::ShapeMismatch {
                expected: format!("T x {} x 3", topology.joint_count()),
                actual: format!("{t} x {j} x {c}"),
            });
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMotion("non-finite coordinate".into()));
        }
        Ok(Self { topology, positions, label, name })
    }

    pub fn topology(&self) -> &Arc<SkeletonTopology> {
        &self.topology
    }

    pub fn frame_count(&self) -> usize {
        self.positions.dim().0
    }

    pub fn positions(&self) -> &Array3<f64> {
        &self.positions
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Same topology, label and name with replaced coordinates.
    pub fn with_positions(&self, positions: Array3<f64>) -> Result<Self> {
        Self::new(self.topology.clone(), positions, self.label, self.name.clone())
    }

    /// True when every coordinate lies in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.positions.iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}
