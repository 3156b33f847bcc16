//! Adversarial attacks on skeletal-motion action classifiers.
//!
//! The attack minimizes a multi-term motion distance (bone length, bone
//! angle, joint speed, emotion features) subject to a misclassification
//! constraint, solved with an augmented-Lagrangian loop around an Adam inner
//! optimizer. The crate ships desk-scale differentiable victims so every
//! gradient and metric can be verified end to end.
//!
//! Module map:
//!
//! - [`motion`]: skeleton topology, motions, dynamics quantities, datasets,
//!   JSON I/O and a seeded synthetic generator.
//! - [`classifier`]: differentiable victims (MLP / linear), training, the
//!   emotion feature extractor, model serialization.
//! - [`loss`]: attack objective terms with analytic gradients and a
//!   finite-difference oracle.
//! - [`attack`]: the augmented-Lagrangian attack loop, Adam state, box
//!   projection, batch orchestration.
//! - [`metrics`]: imperceptibility and success-rate metrics with report
//!   formatting.

pub mod attack;
pub mod classifier;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod motion;

pub use error::{Error, Result};
