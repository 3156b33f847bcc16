//! The attack loop: augmented-Lagrangian dual ascent around an Adam inner
//! minimizer with box projection and best-candidate tracking.
//!
//! Each outer iteration runs K inner Adam steps on `L(., lambda)` (K = 1 by
//! default, matching one backward pass per iteration), projects onto the
//! `[0,1]` box, then performs the dual ascent `lambda += gamma * C`. Among
//! all iterates achieving the attack goal (judged by the predicted label,
//! i.e. at margin 0), the one with minimum distance `D` is returned.

mod adam;
mod batch;
mod speed_cap;

pub use adam::{adam_step, project_box, AdamParams, AdamState};
pub use batch::{attack_batch, batch_prediction_outcomes, batch_sample_metrics, BatchItem, Parallelism};
pub use speed_cap::apply_speed_cap;

use crate::classifier::{ClassifierModel, EmotionExtractor};
use crate::error::{Error, Result};
use crate::loss::{
    augmented_lagrangian, constraint_from_logits, total_distance, AttackMode, ConstraintSpec,
    LossWeights,
};
use crate::metrics::SampleMetrics;
use crate::motion::SkeletonMotion;

/// Full solver configuration for one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub constraint: ConstraintSpec,
    /// Penalty weight of the augmented term and the dual step size.
    pub gamma: f64,
    /// Outer iteration budget I.
    pub max_iterations: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Initial multiplier.
    pub initial_lambda: f64,
    pub weights: LossWeights,
    pub adam: AdamParams,
    /// Optional post-step relative speed-deviation cap.
    pub eps_s_cap: Option<f64>,
    pub seed: u64,
    pub record_trace: bool,
    /// Inner Adam steps per dual update (K).
    pub inner_steps: usize,
    /// Attack a sample the victim already misclassifies instead of erroring.
    pub force: bool,
    /// Stop this many iterations after the first success; `None` runs all I.
    pub patience: Option<usize>,
}

impl AttackConfig {
    pub fn new(constraint: ConstraintSpec) -> Self {
        Self {
            constraint,
            gamma: 1.0,
            max_iterations: 1000,
            learning_rate: 5e-3,
            initial_lambda: 0.0,
            weights: LossWeights::default(),
            adam: AdamParams::default(),
            eps_s_cap: None,
            seed: 0,
            record_trace: false,
            inner_steps: 1,
            force: false,
            patience: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.initial_lambda < 0.0 || !self.initial_lambda.is_finite() {
            return Err(Error::InvalidConfig("initial lambda must be nonnegative".into()));
        }
        if self.inner_steps == 0 {
            return Err(Error::InvalidConfig("inner_steps must be at least 1".into()));
        }
        if let Some(cap) = self.eps_s_cap {
            if cap < 0.0 || cap.is_nan() {
                return Err(Error::InvalidConfig("speed cap must be nonnegative".into()));
            }
        }
        self.weights.validate()
    }
}

/// One recorded outer iteration: the multiplier after its dual update, the
/// constraint value that drove the update, and the objective values at the
/// iterate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub lambda: f64,
    pub constraint: f64,
    pub distance: f64,
    pub lagrangian: f64,
}

/// Outcome of one attack.
#[derive(Debug, Clone)]
pub struct AttackResult {
    /// Best successful iterate, or the final iterate when nothing succeeded.
    pub adversarial: SkeletonMotion,
    pub success: bool,
    pub predicted_label: usize,
    pub iterations_run: usize,
    pub first_success_iteration: Option<usize>,
    pub final_lambda: f64,
    /// Distance `D` of the returned motion.
    pub best_distance: f64,
    pub trace: Option<Vec<TraceEntry>>,
    pub metrics: SampleMetrics,
}

/// The multiplier ascent step `lambda' = lambda + gamma * C`.
pub fn dual_update(lambda: f64, gamma: f64, constraint: f64) -> f64 {
    lambda + gamma * constraint
}

fn goal_reached(predicted: usize, spec: &ConstraintSpec) -> bool {
    match spec.mode() {
        AttackMode::Untargeted => predicted != spec.true_label(),
        AttackMode::Targeted => Some(predicted) == spec.target_label(),
    }
}

struct BestCandidate {
    positions: ndarray::Array3<f64>,
    distance: f64,
    predicted: usize,
}

/// Run Algorithm-style dual ascent on one normalized motion.
pub fn run_attack(
    x: &SkeletonMotion,
    model: &dyn ClassifierModel,
    extractor: &dyn EmotionExtractor,
    config: &AttackConfig,
) -> Result<AttackResult> {
    config.validate()?;
    let dims = x.positions().dim();
    if model.input_shape() != (dims.0, dims.1) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?} motion for the victim", model.input_shape()),
            actual: format!("{} x {}", dims.0, dims.1),
        });
    }
    if extractor.input_shape() != (dims.0, dims.1) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?} motion for the extractor", extractor.input_shape()),
            actual: format!("{} x {}", dims.0, dims.1),
        });
    }
    if !x.is_normalized() {
        return Err(Error::InvalidMotion("attack input must lie in [0,1]".into()));
    }
    let spec = &config.constraint;
    if spec.true_label() >= model.class_count() {
        return Err(Error::InvalidConfig(format!(
            "true label {} outside [0,{})",
            spec.true_label(),
            model.class_count()
        )));
    }
    if let Some(target) = spec.target_label() {
        if target >= model.class_count() {
            return Err(Error::InvalidConfig(format!(
                "target label {target} outside [0,{})",
                model.class_count()
            )));
        }
    }

    let clean_prediction = model.forward(x)?.argmax();
    if spec.mode() == AttackMode::Untargeted
        && clean_prediction != spec.true_label()
        && !config.force
    {
        return Err(Error::AlreadyMisclassified {
            label: spec.true_label(),
            predicted: clean_prediction,
        });
    }

    let mut current = x.clone();
    let mut lambda = config.initial_lambda;
    let mut adam_state = AdamState::new(dims);
    let mut trace = config.record_trace.then(Vec::new);
    let mut best: Option<BestCandidate> = None;
    let mut first_success = None;

    // Iteration 0 evaluates the clean starting point itself.
    let evaluate = |iterate: &SkeletonMotion,
                        iteration: usize,
                        lambda_now: f64,
                        best: &mut Option<BestCandidate>,
                        first_success: &mut Option<usize>|
     -> Result<(usize, f64, f64, f64)> {
        let logits = model.forward(iterate)?;
        let predicted = logits.argmax();
        let c = constraint_from_logits(&logits.0, spec)?;
        let d = total_distance(x, iterate, &config.weights, extractor)?.d;
        let l = d + lambda_now * c + 0.5 * config.gamma * c * c;
        if goal_reached(predicted, spec) {
            first_success.get_or_insert(iteration);
            if best.as_ref().map_or(true, |b| d < b.distance) {
                *best = Some(BestCandidate {
                    positions: iterate.positions().clone(),
                    distance: d,
                    predicted,
                });
            }
        }
        Ok((predicted, c, d, l))
    };

    let (predicted, c0, d0, l0) =
        evaluate(&current, 0, lambda, &mut best, &mut first_success)?;
    let mut last_predicted = predicted;
    let mut last_distance = d0;
    if let Some(t) = trace.as_mut() {
        t.push(TraceEntry { iteration: 0, lambda, constraint: c0, distance: d0, lagrangian: l0 });
    }

    let mut iterations_run = 0;
    for iteration in 1..=config.max_iterations {
        iterations_run = iteration;
        for _ in 0..config.inner_steps {
            let breakdown = augmented_lagrangian(
                x,
                &current,
                lambda,
                config.gamma,
                &config.weights,
                spec,
                model,
                extractor,
            )?;
            let delta =
                adam_step(&mut adam_state, &breakdown.gradient, config.learning_rate, &config.adam)?;
            let stepped = project_box(&(current.positions() + &delta));
            current = current.with_positions(stepped)?;
        }
        if let Some(cap) = config.eps_s_cap {
            current = apply_speed_cap(x, &current, cap)?;
        }

        let (predicted, c, d, l) =
            evaluate(&current, iteration, lambda, &mut best, &mut first_success)?;
        lambda = dual_update(lambda, config.gamma, c);
        last_predicted = predicted;
        last_distance = d;
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry { iteration, lambda, constraint: c, distance: d, lagrangian: l });
        }
        if let (Some(patience), Some(hit)) = (config.patience, first_success) {
            if iteration >= hit + patience {
                break;
            }
        }
    }

    let (adversarial, success, predicted_label, best_distance) = match best {
        Some(b) => (current.with_positions(b.positions)?, true, b.predicted, b.distance),
        None => (current, false, last_predicted, last_distance),
    };
    debug_assert!(adversarial.is_normalized());
    let metrics = SampleMetrics::measure(x, &adversarial, success)?;
    Ok(AttackResult {
        adversarial,
        success,
        predicted_label,
        iterations_run,
        first_success_iteration: first_success,
        final_lambda: lambda,
        best_distance,
        trace,
        metrics,
    })
}

#[cfg(test)]
mod tests;
