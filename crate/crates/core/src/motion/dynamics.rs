//! Dynamics quantities of a motion: bone lengths, bone angles, joint speeds.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::motion::{SkeletonMotion, COS_CLAMP, MIN_BONE_LEN};

/// Euclidean length of every bone at every frame, `T x |bones|`.
pub fn bone_lengths(motion: &SkeletonMotion) -> Array2<f64> {
    let pos = motion.positions();
    let bones = motion.topology().bones();
    let t_count = motion.frame_count();
    let mut out = Array2::zeros((t_count, bones.len()));
    for t in 0..t_count {
        for (i, &(s, e)) in bones.iter().enumerate() {
            let mut sq = 0.0;
            for c in 0..3 {
                let d = pos[[t, s, c]] - pos[[t, e, c]];
                sq += d * d;
            }
            out[[t, i]] = sq.sqrt();
        }
    }
    out
}

/// Interior angle (radians) of every angle pair at every frame,
/// `T x |angle_pairs|`. Both bone vectors point away from the shared joint;
/// the cosine is clamped so values stay in
/// `[arccos(1 - COS_CLAMP), arccos(-1 + COS_CLAMP)]`.
///
/// Pairs involving a bone shorter than [`MIN_BONE_LEN`] get angle 0.
pub fn bone_angles(motion: &SkeletonMotion) -> Array2<f64> {
    bone_angles_with_flags(motion).0
}

/// As [`bone_angles`], also returning a flag per entry marking degenerate
/// (near-zero-length) bones where the angle was defined as 0.
pub fn bone_angles_with_flags(motion: &SkeletonMotion) -> (Array2<f64>, Array2<bool>) {
    let pos = motion.positions();
    let topo = motion.topology();
    let pairs = topo.angle_pairs();
    let t_count = motion.frame_count();
    let mut out = Array2::zeros((t_count, pairs.len()));
    let mut degenerate = Array2::from_elem((t_count, pairs.len()), false);
    for t in 0..t_count {
        for (k, &pair) in pairs.iter().enumerate() {
            let (shared, ja, jb) = topo.angle_joints(pair);
            let mut dot = 0.0;
            let mut nu = 0.0;
            let mut nv = 0.0;
            for c in 0..3 {
                let u = pos[[t, ja, c]] - pos[[t, shared, c]];
                let v = pos[[t, jb, c]] - pos[[t, shared, c]];
                dot += u * v;
                nu += u * u;
                nv += v * v;
            }
            let (nu, nv) = (nu.sqrt(), nv.sqrt());
            if nu < MIN_BONE_LEN || nv < MIN_BONE_LEN {
                degenerate[[t, k]] = true;
                continue; // angle stays 0
            }
            let cos = (dot / (nu * nv)).clamp(-1.0 + COS_CLAMP, 1.0 - COS_CLAMP);
            out[[t, k]] = cos.acos();
        }
    }
    (out, degenerate)
}

/// Per-joint displacement between consecutive frames, `(T-1) x J`.
pub fn joint_speeds(motion: &SkeletonMotion) -> Result<Array2<f64>> {
    let t_count = motion.frame_count();
    if t_count < 2 {
        return Err(Error::InvalidMotion("motion too short for speed (T < 2)".into()));
    }
    let pos = motion.positions();
    let j_count = motion.topology().joint_count();
    let mut out = Array2::zeros((t_count - 1, j_count));
    for t in 0..t_count - 1 {
        for j in 0..j_count {
            let mut sq = 0.0;
            for c in 0..3 {
                let d = pos[[t + 1, j, c]] - pos[[t, j, c]];
                sq += d * d;
            }
            out[[t, j]] = sq.sqrt();
        }
    }
    Ok(out)
}
