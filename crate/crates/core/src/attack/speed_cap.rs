//! Optional post-hoc clamp bounding the relative joint-speed deviation.

use crate::error::{Error, Result};
use crate::loss::EPS_DEN;
use crate::motion::{joint_speeds, SkeletonMotion};

const SHRINK_ROUNDS: usize = 20;

/// Frames adjacent to any interval whose relative speed deviation exceeds
/// the cap.
fn offending_frames(
    x: &SkeletonMotion,
    x_adv: &SkeletonMotion,
    cap: f64,
) -> Result<Vec<usize>> {
    let orig = joint_speeds(x)?;
    let adv = joint_speeds(x_adv)?;
    let (intervals, joints) = orig.dim();
    let mut frames = vec![false; x.frame_count()];
    for t in 0..intervals {
        for j in 0..joints {
            if (orig[[t, j]] - adv[[t, j]]).abs() / orig[[t, j]].max(EPS_DEN) > cap {
                frames[t] = true;
                frames[t + 1] = true;
            }
        }
    }
    Ok(frames
        .iter()
        .enumerate()
        .filter_map(|(i, &hit)| hit.then_some(i))
        .collect())
}

/// Rescale the displacement of offending frames toward the original until
/// every relative speed deviation is within `cap` (factor 0.5, up to 20
/// rounds, then a hard snap of whatever still violates).
pub fn apply_speed_cap(
    x: &SkeletonMotion,
    x_adv: &SkeletonMotion,
    cap: f64,
) -> Result<SkeletonMotion> {
    if cap < 0.0 || cap.is_nan() {
        return Err(Error::InvalidConfig("speed cap must be nonnegative".into()));
    }
    crate::loss::check_pair(x, x_adv)?;
    let mut current = x_adv.clone();
    for round in 0..SHRINK_ROUNDS + x.frame_count() {
        let frames = offending_frames(x, &current, cap)?;
        if frames.is_empty() {
            break;
        }
        let snap = round >= SHRINK_ROUNDS;
        let mut pos = current.positions().clone();
        let orig = x.positions();
        for &t in &frames {
            for j in 0..x.topology().joint_count() {
                for c in 0..3 {
                    pos[[t, j, c]] = if snap {
                        orig[[t, j, c]]
                    } else {
                        orig[[t, j, c]] + 0.5 * (pos[[t, j, c]] - orig[[t, j, c]])
                    };
                }
            }
        }
        current = current.with_positions(pos)?;
    }
    Ok(current)
}
