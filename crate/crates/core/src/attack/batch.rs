//! Batch orchestration: independent per-sample attacks with order-free,
//! bit-reproducible results.

use rayon::prelude::*;

use crate::attack::{run_attack, AttackConfig, AttackResult};
use crate::classifier::{ClassifierModel, EmotionExtractor};
use crate::error::{Error, Result};
use crate::loss::{AttackMode, ConstraintSpec};
use crate::metrics::{PredictionOutcome, SampleMetrics};
use crate::motion::SkeletonMotion;

/// Execution strategy for a batch. Results are identical across all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Serial,
    /// Rayon's global pool.
    DefaultThreads,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

/// One sample's slot in a batch run. Per-sample failures (unlabeled motion,
/// already-misclassified clean, target equals true label) stay in place
/// without aborting the rest.
#[derive(Debug)]
pub struct BatchItem {
    pub index: usize,
    pub name: Option<String>,
    pub true_label: Option<usize>,
    pub outcome: Result<AttackResult>,
}

fn sample_constraint(base: &ConstraintSpec, label: usize) -> Result<ConstraintSpec> {
    match base.mode() {
        AttackMode::Untargeted => ConstraintSpec::untargeted(label, base.conf()),
        AttackMode::Targeted => {
            let target = base
                .target_label()
                .ok_or_else(|| Error::InvalidConfig("targeted batch needs a target label".into()))?;
            ConstraintSpec::targeted(label, target, base.conf())
        }
    }
}

fn run_one(
    index: usize,
    motion: &SkeletonMotion,
    model: &dyn ClassifierModel,
    extractor: &dyn EmotionExtractor,
    base: &AttackConfig,
) -> BatchItem {
    let outcome = (|| {
        let label = motion
            .label()
            .ok_or_else(|| Error::InvalidMotion(format!("motion {index} has no label")))?;
        let mut config = base.clone();
        config.constraint = sample_constraint(&base.constraint, label)?;
        config.seed = base.seed ^ index as u64;
        run_attack(motion, model, extractor, &config)
    })();
    BatchItem {
        index,
        name: motion.name().map(str::to_owned),
        true_label: motion.label(),
        outcome,
    }
}

/// Attack every motion independently. The per-sample constraint takes its
/// true label from the motion; the per-sample seed is `config.seed XOR index`.
pub fn attack_batch(
    motions: &[SkeletonMotion],
    model: &dyn ClassifierModel,
    extractor: &dyn EmotionExtractor,
    config: &AttackConfig,
    parallelism: Parallelism,
) -> Vec<BatchItem> {
    let job = |index: usize| run_one(index, &motions[index], model, extractor, config);
    match parallelism {
        Parallelism::Serial => (0..motions.len()).map(job).collect(),
        Parallelism::DefaultThreads => (0..motions.len()).into_par_iter().map(job).collect(),
        Parallelism::Threads(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool construction");
            pool.install(|| (0..motions.len()).into_par_iter().map(job).collect())
        }
    }
}

/// Per-sample metric records of the attacks that ran.
pub fn batch_sample_metrics(items: &[BatchItem]) -> Vec<SampleMetrics> {
    items
        .iter()
        .filter_map(|item| item.outcome.as_ref().ok().map(|r| r.metrics))
        .collect()
}

/// Prediction outcomes of the attacks that ran; feeds `success_rate`.
pub fn batch_prediction_outcomes(items: &[BatchItem], target: Option<usize>) -> Vec<PredictionOutcome> {
    items
        .iter()
        .filter_map(|item| {
            let result = item.outcome.as_ref().ok()?;
            Some(PredictionOutcome {
                true_label: item.true_label?,
                predicted_label: result.predicted_label,
                target_label: target,
            })
        })
        .collect()
}
