//! Attack objective: dynamic distances, emotion distance, classification
//! constraint, and the augmented Lagrangian, all with analytic gradients
//! with respect to the adversarial motion.
//!
//! Every gradient here is checked against [`finite_difference_gradient`] in
//! the test suites; the oracle itself only evaluates the scalar function.

mod constraint;
mod finite_diff;
mod terms;

pub use constraint::{classification_constraint, constraint_from_logits};
pub use finite_diff::finite_difference_gradient;
pub use terms::{angle_loss, bone_length_loss, emotion_loss, speed_loss, squared_l2_loss};

use ndarray::Array3;

use crate::classifier::{ClassifierModel, EmotionExtractor};
use crate::error::{Error, Result};
use crate::motion::SkeletonMotion;

/// Denominator guard for the relative distances b, a, s (normalized units).
/// Shared with the metrics module. Static joints and near-zero bones would
/// otherwise produce infinities.
pub const EPS_DEN: f64 = 1e-4;

/// Term weights of the total distance. `w_l2` is 0 in the dynamic-distance
/// attack and carries the l2-only baseline mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_b: f64,
    pub w_a: f64,
    pub w_s: f64,
    pub w_e: f64,
    pub w_l2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w_b: 1.0, w_a: 1.0, w_s: 1.0, w_e: 1.0, w_l2: 0.0 }
    }
}

impl LossWeights {
    /// The l2-only baseline configuration.
    pub fn l2_baseline() -> Self {
        Self { w_b: 0.0, w_a: 0.0, w_s: 0.0, w_e: 0.0, w_l2: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w_b, self.w_a, self.w_s, self.w_e, self.w_l2];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig("loss weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Attack goal: any wrong label, or one specific label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    Untargeted,
    Targeted,
}

/// The classification constraint: mode, labels and required margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    mode: AttackMode,
    true_label: usize,
    target_label: Option<usize>,
    conf: f64,
}

impl ConstraintSpec {
    pub fn untargeted(true_label: usize, conf: f64) -> Result<Self> {
        Self::validate_conf(conf)?;
        Ok(Self { mode: AttackMode::Untargeted, true_label, target_label: None, conf })
    }

    pub fn targeted(true_label: usize, target_label: usize, conf: f64) -> Result<Self> {
        Self::validate_conf(conf)?;
        if target_label == true_label {
            return Err(Error::InvalidConfig(format!(
                "target label {target_label} equals the true label"
            )));
        }
        Ok(Self {
            mode: AttackMode::Targeted,
            true_label,
            target_label: Some(target_label),
            conf,
        })
    }

    fn validate_conf(conf: f64) -> Result<()> {
        if !conf.is_finite() || conf < 0.0 {
            return Err(Error::InvalidConfig("conf must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn mode(&self) -> AttackMode {
        self.mode
    }

    pub fn true_label(&self) -> usize {
        self.true_label
    }

    pub fn target_label(&self) -> Option<usize> {
        self.target_label
    }

    pub fn conf(&self) -> f64 {
        self.conf
    }

    /// Same constraint evaluated at margin 0; used for success accounting.
    pub fn with_zero_conf(&self) -> Self {
        Self { conf: 0.0, ..*self }
    }
}

/// Every term of the objective at one iterate, plus the gradient of `L`
/// (or of `D` when no constraint entered) w.r.t. the adversarial motion.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    pub b: f64,
    pub a: f64,
    pub s: f64,
    pub e: f64,
    pub l2_term: f64,
    pub d: f64,
    pub c: f64,
    pub l: f64,
    pub gradient: Array3<f64>,
}

pub(crate) fn check_pair(x: &SkeletonMotion, x_adv: &SkeletonMotion) -> Result<()> {
    if x.topology().as_ref() != x_adv.topology().as_ref() {
        return Err(Error::InvalidMotion("pair does not share a topology".into()));
    }
    if x.positions().dim() != x_adv.positions().dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", x.positions().dim()),
            actual: format!("{:?}", x_adv.positions().dim()),
        });
    }
    Ok(())
}

/// Absolute-value subgradient with the 0-at-0 convention, so `x' = x` stays
/// a stationary point of the distance.
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weighted total distance `D` with its gradient and full term breakdown.
/// The speed term requires T >= 2; with a single frame it contributes 0.
pub fn total_distance(
    x: &SkeletonMotion,
    x_adv: &SkeletonMotion,
    weights: &LossWeights,
    extractor: &dyn EmotionExtractor,
) -> Result<LossBreakdown> {
    weights.validate()?;
    check_pair(x, x_adv)?;
    let (b, grad_b) = bone_length_loss(x, x_adv)?;
    let (a, grad_a) = angle_loss(x, x_adv)?;
    let (s, grad_s) = if x.frame_count() >= 2 {
        speed_loss(x, x_adv)?
    } else {
        (0.0, Array3::zeros(x.positions().dim()))
    };
    let (e, grad_e) = emotion_loss(x, x_adv, extractor)?;
    let (l2_term, grad_l2) = squared_l2_loss(x, x_adv)?;

    let d = weights.w_b * b
        + weights.w_a * a
        + weights.w_s * s
        + weights.w_e * e
        + weights.w_l2 * l2_term;
    let mut gradient = Array3::zeros(x.positions().dim());
    for (g, w) in [
        (&grad_b, weights.w_b),
        (&grad_a, weights.w_a),
        (&grad_s, weights.w_s),
        (&grad_e, weights.w_e),
        (&grad_l2, weights.w_l2),
    ] {
        if w != 0.0 {
            gradient.scaled_add(w, g);
        }
    }
    Ok(LossBreakdown { b, a, s, e, l2_term, d, c: 0.0, l: d, gradient })
}

/// Augmented Lagrangian `L = D + lambda*C + (gamma/2)*C^2` with gradient
/// `grad D + (lambda + gamma*C) * grad C`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_lagrangian(
    x: &SkeletonMotion,
    x_adv: &SkeletonMotion,
    lambda: f64,
    gamma: f64,
    weights: &LossWeights,
    spec: &ConstraintSpec,
    model: &dyn ClassifierModel,
    extractor: &dyn EmotionExtractor,
) -> Result<LossBreakdown> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig("lambda must be finite and nonnegative".into()));
    }
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidConfig("gamma must be finite and positive".into()));
    }
    let mut breakdown = total_distance(x, x_adv, weights, extractor)?;
    let (c, c_grad) = classification_constraint(x_adv, model, spec)?;
    breakdown.c = c;
    breakdown.l = breakdown.d + lambda * c + 0.5 * gamma * c * c;
    breakdown.gradient.scaled_add(lambda + gamma * c, &c_grad);
    Ok(breakdown)
}
