//! The hinge classification constraint for both attack modes.

use ndarray::Array3;

use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::loss::{AttackMode, ConstraintSpec};
use crate::motion::SkeletonMotion;

/// Largest logit over `j != excluded`; lowest index wins ties.
fn best_other(logits: &[f64], excluded: usize) -> usize {
    let mut best = None;
    for (j, &v) in logits.iter().enumerate() {
        if j == excluded {
            continue;
        }
        match best {
            None => best = Some(j),
            Some(b) if v > logits[b] => best = Some(j),
            _ => {}
        }
    }
    best.expect("at least two classes")
}

/// Signed margin and the (raised, lowered) logit indices of the hinge.
fn hinge_parts(logits: &[f64], spec: &ConstraintSpec) -> Result<(f64, usize, usize)> {
    let class_count = logits.len();
    if class_count < 2 {
        return Err(Error::InvalidConfig("constraint needs at least two classes".into()));
    }
    if spec.true_label() >= class_count {
        return Err(Error::InvalidConfig(format!(
            "true label {} outside [0,{class_count})",
            spec.true_label()
        )));
    }
    match spec.mode() {
        AttackMode::Untargeted => {
            let l = spec.true_label();
            let rival = best_other(logits, l);
            Ok((logits[l] - logits[rival] + spec.conf(), l, rival))
        }
        AttackMode::Targeted => {
            let lt = spec
                .target_label()
                .ok_or_else(|| Error::InvalidConfig("targeted mode requires a target label".into()))?;
            if lt >= class_count {
                return Err(Error::InvalidConfig(format!(
                    "target label {lt} outside [0,{class_count})"
                )));
            }
            let rival = best_other(logits, lt);
            Ok((logits[rival] - logits[lt] + spec.conf(), rival, lt))
        }
    }
}

/// Hinge value computed from already-available logits.
pub fn constraint_from_logits(logits: &[f64], spec: &ConstraintSpec) -> Result<f64> {
    let (margin, _, _) = hinge_parts(logits, spec)?;
    Ok(margin.max(0.0))
}

/// Hinge violation of the attack goal and its gradient.
///
/// Untargeted: `C = max(0, logit_l - max_{j!=l} logit_j + conf)`.
/// Targeted:   `C = max(0, max_{j!=lt} logit_j - logit_lt + conf)`.
///
/// `C` is 0 exactly when the goal holds with margin `conf`; the gradient
/// flows through the unique active maximizer and is 0 on the flat side.
pub fn classification_constraint(
    x_adv: &SkeletonMotion,
    model: &dyn ClassifierModel,
    spec: &ConstraintSpec,
) -> Result<(f64, Array3<f64>)> {
    let class_count = model.class_count();
    let logits = model.forward(x_adv)?;
    let (margin, up, down) = hinge_parts(&logits.0, spec)?;
    if margin <= 0.0 {
        return Ok((0.0, Array3::zeros(x_adv.positions().dim())));
    }
    let mut cotangent = vec![0.0; class_count];
    cotangent[up] += 1.0;
    cotangent[down] -= 1.0;
    let grad = model.input_gradient(x_adv, &cotangent)?;
    Ok((margin, grad))
}
