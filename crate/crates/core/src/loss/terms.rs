//! The four distance terms and the l2 baseline term, each returning
//! `(value, gradient w.r.t. the adversarial motion)`.

use ndarray::Array3;

use crate::classifier::EmotionExtractor;
use crate::error::Result;
use crate::loss::{check_pair, sign0, EPS_DEN};
use crate::motion::{bone_angles, bone_lengths, joint_speeds, SkeletonMotion, COS_CLAMP, MIN_BONE_LEN};

/// Mean relative bone-length deviation `|B - B'| / max(B, eps)`.
pub fn bone_length_loss(x: &SkeletonMotion, x_adv: &SkeletonMotion) -> Result<(f64, Array3<f64>)> {
    check_pair(x, x_adv)?;
    let bones = x.topology().bones();
    let t_count = x.frame_count();
    let mut grad = Array3::zeros(x.positions().dim());
    let count = t_count * bones.len();
    if count == 0 {
        return Ok((0.0, grad));
    }
    let orig = bone_lengths(x);
    let pos_adv = x_adv.positions();
    let inv_count = 1.0 / count as f64;
    let mut value = 0.0;
    for t in 0..t_count {
        for (i, &(s, e)) in bones.iter().enumerate() {
            let mut diff = [0.0; 3];
            let mut sq = 0.0;
            for c in 0..3 {
                diff[c] = pos_adv[[t, s, c]] - pos_adv[[t, e, c]];
                sq += diff[c] * diff[c];
            }
            let len_adv = sq.sqrt();
            let den = orig[[t, i]].max(EPS_DEN);
            let num = orig[[t, i]] - len_adv;
            value += num.abs() / den;
            if len_adv > 0.0 {
                // d|B - B'|/dB' = -sign(B - B'); dB'/dp = unit bone vector.
                let coeff = -sign0(num) / den * inv_count / len_adv;
                for c in 0..3 {
                    grad[[t, s, c]] += coeff * diff[c];
                    grad[[t, e, c]] -= coeff * diff[c];
                }
            }
        }
    }
    Ok((value * inv_count, grad))
}

/// Mean relative bone-angle deviation `|A - A'| / max(A, eps)` with the
/// clamped-arccos angle of the motion module. The clamp has zero derivative
/// at saturation; degenerate bones contribute angle 0 and no gradient.
pub fn angle_loss(x: &SkeletonMotion, x_adv: &SkeletonMotion) -> Result<(f64, Array3<f64>)> {
    check_pair(x, x_adv)?;
    let topo = x.topology();
    let pairs = topo.angle_pairs();
    let t_count = x.frame_count();
    let mut grad = Array3::zeros(x.positions().dim());
    let count = t_count * pairs.len();
    if count == 0 {
        return Ok((0.0, grad));
    }
    let orig = bone_angles(x);
    let pos = x_adv.positions();
    let inv_count = 1.0 / count as f64;
    let mut value = 0.0;
    for t in 0..t_count {
        for (k, &pair) in pairs.iter().enumerate() {
            let (shared, ja, jb) = topo.angle_joints(pair);
            let mut u = [0.0; 3];
            let mut v = [0.0; 3];
            for c in 0..3 {
                u[c] = pos[[t, ja, c]] - pos[[t, shared, c]];
                v[c] = pos[[t, jb, c]] - pos[[t, shared, c]];
            }
            let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let den = orig[[t, k]].max(EPS_DEN);
            if nu < MIN_BONE_LEN || nv < MIN_BONE_LEN {
                // Degenerate adversarial bone: angle defined as 0.
                value += orig[[t, k]] / den;
                continue;
            }
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cos = dot / (nu * nv);
            let clamped = cos.clamp(-1.0 + COS_CLAMP, 1.0 - COS_CLAMP);
            let angle_adv = clamped.acos();
            let num = orig[[t, k]] - angle_adv;
            value += num.abs() / den;
            if cos <= -1.0 + COS_CLAMP || cos >= 1.0 - COS_CLAMP {
                continue; // saturated clamp: zero derivative
            }
            // dA'/dcos = -1/sqrt(1 - cos^2);
            // dcos/du = (v_hat - cos*u_hat)/|u|, dcos/dv symmetric.
            let darc = -1.0 / (1.0 - clamped * clamped).sqrt();
            let factor = -sign0(num) / den * inv_count * darc;
            for c in 0..3 {
                let du = (v[c] / nv - clamped * u[c] / nu) / nu;
                let dv = (u[c] / nu - clamped * v[c] / nv) / nv;
                grad[[t, ja, c]] += factor * du;
                grad[[t, jb, c]] += factor * dv;
                grad[[t, shared, c]] -= factor * (du + dv);
            }
        }
    }
    Ok((value * inv_count, grad))
}

/// Mean relative joint-speed deviation `|S - S'| / max(S, eps)`.
pub fn speed_loss(x: &SkeletonMotion, x_adv: &SkeletonMotion) -> Result<(f64, Array3<f64>)> {
    check_pair(x, x_adv)?;
    let orig = joint_speeds(x)?;
    let t_count = x.frame_count();
    let j_count = x.topology().joint_count();
    let pos = x_adv.positions();
    let mut grad = Array3::zeros(x.positions().dim());
    let count = (t_count - 1) * j_count;
    let inv_count = 1.0 / count as f64;
    let mut value = 0.0;
    for t in 0..t_count - 1 {
        for j in 0..j_count {
            let mut diff = [0.0; 3];
            let mut sq = 0.0;
            for c in 0..3 {
                diff[c] = pos[[t + 1, j, c]] - pos[[t, j, c]];
                sq += diff[c] * diff[c];
            }
            let speed_adv = sq.sqrt();
            let den = orig[[t, j]].max(EPS_DEN);
            let num = orig[[t, j]] - speed_adv;
            value += num.abs() / den;
            if speed_adv > 0.0 {
                let coeff = -sign0(num) / den * inv_count / speed_adv;
                for c in 0..3 {
                    grad[[t + 1, j, c]] += coeff * diff[c];
                    grad[[t, j, c]] -= coeff * diff[c];
                }
            }
        }
    }
    Ok((value * inv_count, grad))
}

/// Euclidean distance between emotion embeddings, `||E(x) - E(x')||_2`.
/// The gradient at the nondifferentiable point `E(x) = E(x')` is 0.
pub fn emotion_loss(
    x: &SkeletonMotion,
    x_adv: &SkeletonMotion,
    extractor: &dyn EmotionExtractor,
) -> Result<(f64, Array3<f64>)> {
    check_pair(x, x_adv)?;
    let fx = extractor.features(x)?;
    let fx_adv = extractor.features(x_adv)?;
    let diff: Vec<f64> = fx_adv.iter().zip(&fx).map(|(a, b)| a - b).collect();
    let value = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    if value == 0.0 {
        return Ok((0.0, Array3::zeros(x.positions().dim())));
    }
    let cotangent: Vec<f64> = diff.iter().map(|d| d / value).collect();
    let grad = extractor.input_gradient(x_adv, &cotangent)?;
    Ok((value, grad))
}

/// Squared coordinate l2 distance; the baseline term behind `w_l2`.
pub fn squared_l2_loss(x: &SkeletonMotion, x_adv: &SkeletonMotion) -> Result<(f64, Array3<f64>)> {
    check_pair(x, x_adv)?;
    let mut value = 0.0;
    let mut grad = Array3::zeros(x.positions().dim());
    for ((g, &a), &b) in grad.iter_mut().zip(x_adv.positions()).zip(x.positions()) {
        let d = a - b;
        value += d * d;
        *g = 2.0 * d;
    }
    Ok((value, grad))
}
