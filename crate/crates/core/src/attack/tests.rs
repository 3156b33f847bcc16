use std::sync::Arc;

use ndarray::{Array1, Array2, Array3};

use crate::attack::*;
use crate::classifier::{
    train_classifier, Architecture, ClassifierModel, GroupedEmotionExtractor, LinearClassifier,
};
use crate::error::Error;
use crate::loss::{ConstraintSpec, LossWeights};
use crate::motion::{
    generate_synthetic_dataset, SkeletonMotion, SkeletonTopology, Split, SyntheticSpec,
};

fn generic_motion(t: usize, j: usize, seed: u64) -> SkeletonMotion {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(5));
    let topo = Arc::new(SkeletonTopology::chain(j).unwrap());
    let pos = Array3::from_shape_fn((t, j, 3), |_| rng.random_range(0.25..0.75));
    SkeletonMotion::new(topo, pos, Some(0), None).unwrap()
}

/// Two-class margin victim: rows (w, -w) with the bias tuned so the clean
/// logit gap at `x` is exactly `margin` in favor of class 0.
fn margin_victim(x: &SkeletonMotion, seed: u64, margin: f64) -> (LinearClassifier, Array1<f64>) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let (t, j, _) = x.positions().dim();
    let n = t * j * 3;
    let w = Array1::from_shape_fn(n, |_| {
        rng.random_range(0.3..1.0) * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 }
    });
    let mut rows = Array2::zeros((2, n));
    for (i, &v) in w.iter().enumerate() {
        rows[[0, i]] = v;
        rows[[1, i]] = -v;
    }
    let w_dot_x: f64 = w.iter().zip(x.positions().iter()).map(|(a, b)| a * b).sum();
    let bias0 = margin - 2.0 * w_dot_x;
    let model =
        LinearClassifier::new((t, j), rows, Array1::from_vec(vec![bias0, 0.0])).unwrap();
    (model, w)
}

fn small_extractor(t: usize, j: usize) -> GroupedEmotionExtractor {
    GroupedEmotionExtractor::seeded((t, j), 77)
}

#[test]
fn dual_update_arithmetic() {
    assert!((dual_update(0.5, 1.0, 0.2) - 0.7).abs() < 1e-15);
    assert_eq!(dual_update(0.9, 5.0, 0.0), 0.9);
    assert!((dual_update(0.0, 10.0, 0.2) - 2.0).abs() < 1e-15);
}

#[test]
fn already_misclassified_rejected_unless_forced() {
    let x = generic_motion(2, 2, 1);
    let (model, _) = margin_victim(&x, 1, 0.8);
    let extractor = small_extractor(2, 2);
    // The victim predicts some class; claim the other as true label.
    let clean = model.forward(&x).unwrap().argmax();
    let wrong_label = 1 - clean;
    let spec = ConstraintSpec::untargeted(wrong_label, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 5;
    let err = run_attack(&x, &model, &extractor, &config).unwrap_err();
    assert!(matches!(err, Error::AlreadyMisclassified { .. }));

    config.force = true;
    let result = run_attack(&x, &model, &extractor, &config).unwrap();
    assert!(result.success);
    assert_eq!(result.first_success_iteration, Some(0));
    assert_eq!(result.best_distance, 0.0);
    assert_eq!(result.adversarial.positions(), x.positions());
    assert_eq!(result.metrics.l2, 0.0);
}

#[test]
fn lambda_monotone_and_strict_under_violation() {
    let x = generic_motion(3, 3, 2);
    let (model, _) = margin_victim(&x, 2, 1.5);
    let extractor = small_extractor(3, 3);
    let clean = model.forward(&x).unwrap().argmax();
    let spec = ConstraintSpec::untargeted(clean, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 60;
    config.record_trace = true;
    let result = run_attack(&x, &model, &extractor, &config).unwrap();
    let trace = result.trace.as_ref().unwrap();
    assert_eq!(trace.len(), 61);
    for pair in trace.windows(2) {
        assert!(pair[1].lambda >= pair[0].lambda, "lambda never decreases");
        if pair[1].constraint > 0.0 {
            assert!(pair[1].lambda > pair[0].lambda, "violated iterations raise lambda");
        }
    }
    assert_eq!(result.final_lambda, trace.last().unwrap().lambda);
}

#[test]
fn returned_motion_is_box_feasible_and_reproducibly_misclassified() {
    let x = generic_motion(3, 3, 3);
    let (model, _) = margin_victim(&x, 3, 2.0);
    let extractor = small_extractor(3, 3);
    let clean = model.forward(&x).unwrap().argmax();
    let spec = ConstraintSpec::untargeted(clean, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 400;
    let result = run_attack(&x, &model, &extractor, &config).unwrap();
    assert!(result.success, "margin victim must fall within 400 iterations");
    assert!(result.adversarial.is_normalized());
    let rerun = model.forward(&result.adversarial).unwrap().argmax();
    assert_ne!(rerun, clean);
    assert_eq!(rerun, result.predicted_label);
}

#[test]
fn best_distance_nonincreasing_in_iteration_budget() {
    let x = generic_motion(3, 3, 4);
    let (model, _) = margin_victim(&x, 4, 1.0);
    let extractor = small_extractor(3, 3);
    let clean = model.forward(&x).unwrap().argmax();
    let spec = ConstraintSpec::untargeted(clean, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 150;
    let short = run_attack(&x, &model, &extractor, &config).unwrap();
    config.max_iterations = 500;
    let long = run_attack(&x, &model, &extractor, &config).unwrap();
    assert!(short.success && long.success);
    assert!(long.best_distance <= short.best_distance + 1e-15);
}

#[test]
fn attack_is_deterministic() {
    let x = generic_motion(2, 3, 5);
    let (model, _) = margin_victim(&x, 5, 1.2);
    let extractor = small_extractor(2, 3);
    let clean = model.forward(&x).unwrap().argmax();
    let spec = ConstraintSpec::untargeted(clean, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 120;
    config.record_trace = true;
    let a = run_attack(&x, &model, &extractor, &config).unwrap();
    let b = run_attack(&x, &model, &extractor, &config).unwrap();
    assert_eq!(a.adversarial.positions(), b.adversarial.positions());
    assert_eq!(a.trace.unwrap(), b.trace.unwrap());
    assert_eq!(a.final_lambda, b.final_lambda);
}

#[test]
fn huge_speed_cap_changes_nothing() {
    let x = generic_motion(3, 2, 6);
    let (model, _) = margin_victim(&x, 6, 1.0);
    let extractor = small_extractor(3, 2);
    let clean = model.forward(&x).unwrap().argmax();
    let spec = ConstraintSpec::untargeted(clean, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 60;
    let plain = run_attack(&x, &model, &extractor, &config).unwrap();
    config.eps_s_cap = Some(f64::INFINITY);
    let capped = run_attack(&x, &model, &extractor, &config).unwrap();
    assert_eq!(plain.adversarial.positions(), capped.adversarial.positions());
}

#[test]
fn l2_only_attack_approaches_closed_form_minimum() {
    // Closed form: the minimal l2 perturbation flipping a linear two-class
    // margin `gap(x) = 2 w.x + db` is `gap(x0) / (2 ||w||)`.
    let x = generic_motion(2, 2, 7);
    let (model, w) = margin_victim(&x, 7, 0.4);
    let extractor = small_extractor(2, 2);
    let clean = model.forward(&x).unwrap().argmax();
    assert_eq!(clean, 0, "margin construction keeps class 0 on top");
    let logits = model.forward(&x).unwrap();
    let margin = logits.0[0] - logits.0[1];
    assert!((margin - 0.4).abs() < 1e-9);
    let norm_w: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let optimal = margin / (2.0 * norm_w);

    let spec = ConstraintSpec::untargeted(0, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.weights = LossWeights::l2_baseline();
    config.max_iterations = 4000;
    config.learning_rate = 2e-3;
    let result = run_attack(&x, &model, &extractor, &config).unwrap();
    assert!(result.success);
    let achieved = result.best_distance.sqrt();
    assert!(
        achieved <= optimal * 1.10 && achieved >= optimal * 0.999,
        "achieved {achieved}, closed-form {optimal}"
    );
}

#[test]
fn batch_is_order_free_and_matches_serial() {
    let dataset = generate_synthetic_dataset(&SyntheticSpec {
        seed: 13,
        class_count: 3,
        samples_per_class: 10,
        frame_count: 6,
        topology: Arc::new(SkeletonTopology::chain(5).unwrap()),
    })
    .unwrap();
    let (model, report) =
        train_classifier(&dataset, Architecture::Mlp { hidden: (16, 16) }, 3, 120, 1e-3).unwrap();
    assert!(report.test_accuracy.unwrap() > 0.5);
    let extractor = GroupedEmotionExtractor::seeded((6, 5), 9);
    let test: Vec<SkeletonMotion> = dataset
        .indices_of(Split::Test)
        .into_iter()
        .map(|i| dataset.motions()[i].clone())
        .collect();

    let spec = ConstraintSpec::untargeted(0, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 40;
    config.force = true; // tiny victim may misclassify a few cleans
    config.seed = 99;

    let serial = attack_batch(&test, &model, &extractor, &config, Parallelism::Serial);
    let parallel = attack_batch(&test, &model, &extractor, &config, Parallelism::Threads(4));
    assert_eq!(serial.len(), parallel.len());
    for (a, b) in serial.iter().zip(&parallel) {
        assert_eq!(a.index, b.index);
        match (&a.outcome, &b.outcome) {
            (Ok(ra), Ok(rb)) => {
                assert_eq!(ra.adversarial.positions(), rb.adversarial.positions());
                assert_eq!(ra.success, rb.success);
                assert_eq!(ra.final_lambda, rb.final_lambda);
            }
            (Err(ea), Err(eb)) => assert_eq!(ea.to_string(), eb.to_string()),
            _ => panic!("serial and parallel outcomes diverge at {}", a.index),
        }
    }
}

#[test]
fn empty_batch_is_empty() {
    let probe = generic_motion(2, 2, 8);
    let (model, _) = margin_victim(&probe, 8, 0.5);
    let extractor = small_extractor(2, 2);
    let spec = ConstraintSpec::untargeted(0, 0.0).unwrap();
    let config = AttackConfig::new(spec);
    let items = attack_batch(&[], &model, &extractor, &config, Parallelism::Serial);
    assert!(items.is_empty());
    assert!(batch_sample_metrics(&items).is_empty());
}

#[test]
fn targeted_batch_skips_samples_of_the_target_class() {
    let dataset = generate_synthetic_dataset(&SyntheticSpec {
        seed: 21,
        class_count: 3,
        samples_per_class: 5,
        frame_count: 5,
        topology: Arc::new(SkeletonTopology::chain(4).unwrap()),
    })
    .unwrap();
    let (model, _) =
        train_classifier(&dataset, Architecture::Mlp { hidden: (8, 8) }, 1, 60, 1e-3).unwrap();
    let extractor = GroupedEmotionExtractor::seeded((5, 4), 2);
    let motions: Vec<SkeletonMotion> = dataset.motions().to_vec();
    let spec = ConstraintSpec::targeted(0, 2, 0.0).unwrap();
    let mut config = AttackConfig::new(spec);
    config.max_iterations = 5;
    let items = attack_batch(&motions, &model, &extractor, &config, Parallelism::Serial);
    for item in &items {
        if item.true_label == Some(2) {
            assert!(item.outcome.is_err(), "cannot target a sample's own class");
        }
    }
    // Errors stay in place without contaminating neighbors.
    assert_eq!(items.len(), motions.len());
}
