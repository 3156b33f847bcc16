//! Differentiable victim models and the emotion feature extractor.
//!
//! Victims expose pre-softmax logits and exact input gradients; both are
//! verified against finite differences in the test suites. Models are
//! immutable once trained or loaded and safe to share across threads.

mod emotion;
pub mod io;
mod linear;
mod mlp;
mod train;

pub use emotion::GroupedEmotionExtractor;
pub use io::{load_extractor, load_model, save_extractor, save_model, AnyClassifier};
pub use linear::LinearClassifier;
pub use mlp::MlpClassifier;
pub use train::{split_accuracy, train_classifier, Architecture, TrainReport};

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::motion::SkeletonMotion;

/// Pre-softmax class scores of a victim model.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    /// Index of the largest logit; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// A differentiable map from a motion to class logits.
///
/// `forward` must be deterministic (same motion, same bits) and
/// `input_gradient` must return the exact gradient of
/// `<forward(motion), cotangent>` with respect to every coordinate.
pub trait ClassifierModel: Send + Sync {
    fn class_count(&self) -> usize;
    /// Expected motion shape as `(frames, joints)`.
    fn input_shape(&self) -> (usize, usize);
    fn forward(&self, motion: &SkeletonMotion) -> Result<Logits>;
    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>>;
}

/// A deterministic feature embedding of a motion with exact input gradients.
pub trait EmotionExtractor: Send + Sync {
    fn feature_dim(&self) -> usize;
    fn input_shape(&self) -> (usize, usize);
    fn features(&self, motion: &SkeletonMotion) -> Result<Vec<f64>>;
    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>>;
}

pub(crate) fn check_motion_shape(
    expected: (usize, usize),
    motion: &SkeletonMotion,
) -> Result<()> {
    let (t, j, _) = motion.positions().dim();
    if (t, j) != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{} x {} x 3", expected.0, expected.1),
            actual: format!("{t} x {j} x 3"),
        });
    }
    Ok(())
}

pub(crate) fn check_cotangent_len(expected: usize, cotangent: &[f64]) -> Result<()> {
    if cotangent.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("cotangent of length {expected}"),
            actual: format!("length {}", cotangent.len()),
        });
    }
    Ok(())
}

/// Numerically stabilized softmax (max-shift).
pub fn softmax(logits: &Logits) -> Vec<f64> {
    let max = logits.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.0.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log(softmax)` computed in log-space; used by the cross-entropy trainer.
pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|&v| v - log_sum).collect()
}
