//! Full-batch cross-entropy training with Adam.
//!
//! Training is single-threaded and bitwise deterministic under the seed: no
//! shuffling, fixed parameter order, fixed float evaluation order.

use ndarray::{Array1, Array2};

use crate::classifier::io::AnyClassifier;
use crate::classifier::mlp::{DenseLayer, MlpClassifier};
use crate::classifier::{log_softmax, ClassifierModel, LinearClassifier};
use crate::error::{Error, Result};
use crate::motion::{MotionDataset, Split};

/// Victim architecture selector for [`train_classifier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Mlp { hidden: (usize, usize) },
    Linear,
}

impl Architecture {
    /// Two tanh hidden layers of width 64.
    pub fn default_mlp() -> Self {
        Architecture::Mlp { hidden: (64, 64) }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: usize,
    /// Cross-entropy before each update, plus the final loss at the end.
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        *self.loss_history.first().expect("history is nonempty")
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history is nonempty")
    }
}

struct AdamBuf {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamBuf {
    fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len] }
    }

    fn update(&mut self, step: u64, params: &mut [f64], grads: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let bc1 = 1.0 - B1.powi(step as i32);
        let bc2 = 1.0 - B2.powi(step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

fn design_matrix(dataset: &MotionDataset, indices: &[usize]) -> (Array2<f64>, Vec<usize>) {
    let n = dataset
        .motions()
        .first()
        .map(|m| m.positions().len())
        .unwrap_or(0);
    let mut x = Array2::zeros((indices.len(), n));
    let mut y = Vec::with_capacity(indices.len());
    for (row, &i) in indices.iter().enumerate() {
        let motion = &dataset.motions()[i];
        for (col, &v) in motion.positions().iter().enumerate() {
            x[[row, col]] = v;
        }
        y.push(motion.label().expect("dataset motions are labeled"));
    }
    (x, y)
}

/// Forward every row through the layer stack, keeping each layer's output.
fn batch_forward(layers: &[DenseLayer], x: &Array2<f64>) -> Vec<Array2<f64>> {
    let mut outputs = Vec::with_capacity(layers.len());
    let mut h = x.clone();
    for layer in layers {
        let mut z = h.dot(&layer.w.t());
        for mut row in z.rows_mut() {
            row += &layer.b;
        }
        if layer.tanh {
            z.mapv_inplace(f64::tanh);
        }
        outputs.push(z.clone());
        h = z;
    }
    outputs
}

/// Mean cross-entropy and its gradient w.r.t. the logits.
fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (row, &label) in labels.iter().enumerate() {
        let values: Vec<f64> = logits.row(row).to_vec();
        let log_probs = log_softmax(&values);
        loss -= log_probs[label];
        for (k, &lp) in log_probs.iter().enumerate() {
            grad[[row, k]] = (lp.exp() - f64::from(u8::from(k == label))) / n;
        }
    }
    (loss / n, grad)
}

fn backward(
    layers: &[DenseLayer],
    x: &Array2<f64>,
    outputs: &[Array2<f64>],
    mut upstream: Array2<f64>,
) -> Vec<(Array2<f64>, Array1<f64>)> {
    let mut grads = vec![None; layers.len()];
    for l in (0..layers.len()).rev() {
        if layers[l].tanh {
            upstream = &upstream * &outputs[l].mapv(|h| 1.0 - h * h);
        }
        let input = if l == 0 { x } else { &outputs[l - 1] };
        let dw = upstream.t().dot(input);
        let db = upstream.sum_axis(ndarray::Axis(0));
        grads[l] = Some((dw, db));
        if l > 0 {
            upstream = upstream.dot(&layers[l].w);
        }
    }
    grads.into_iter().map(|g| g.expect("all layers visited")).collect()
}

fn stack_accuracy(layers: &[DenseLayer], x: &Array2<f64>, y: &[usize]) -> f64 {
    let logits = batch_forward(layers, x).pop().expect("stack is nonempty");
    let mut correct = 0usize;
    for (row, &label) in y.iter().enumerate() {
        let values = logits.row(row);
        let mut best = 0;
        for k in 1..values.len() {
            if values[k] > values[best] {
                best = k;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    correct as f64 / y.len() as f64
}

/// Train a victim on the dataset's train split, full-batch Adam
/// (beta1 0.9, beta2 0.999, eps 1e-8), deterministic under `seed`.
pub fn train_classifier(
    dataset: &MotionDataset,
    architecture: Architecture,
    seed: u64,
    epochs: usize,
    lr: f64,
) -> Result<(AnyClassifier, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("cannot train on an empty dataset".into()));
    }
    let train_idx = dataset.indices_of(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::EmptyInput("dataset has no train split".into()));
    }
    let test_idx = dataset.indices_of(Split::Test);
    let first = &dataset.motions()[0];
    let input_shape = (first.frame_count(), first.topology().joint_count());
    let class_count = dataset.class_count();

    let mut layers = match architecture {
        Architecture::Mlp { hidden } => {
            MlpClassifier::seeded(input_shape, hidden, class_count, seed).layers
        }
        Architecture::Linear => {
            let n = input_shape.0 * input_shape.1 * 3;
            let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
            vec![DenseLayer::seeded(class_count, n, false, &mut rng)]
        }
    };

    let (x_train, y_train) = design_matrix(dataset, &train_idx);
    let mut adam: Vec<(AdamBuf, AdamBuf)> = layers
        .iter()
        .map(|l| (AdamBuf::new(l.w.len()), AdamBuf::new(l.b.len())))
        .collect();

    let mut loss_history = Vec::with_capacity(epochs + 1);
    for epoch in 0..epochs {
        let outputs = batch_forward(&layers, &x_train);
        let (loss, dlogits) = cross_entropy(outputs.last().expect("stack"), &y_train);
        loss_history.push(loss);
        let grads = backward(&layers, &x_train, &outputs, dlogits);
        let step = epoch as u64 + 1;
        for (l, (dw, db)) in grads.into_iter().enumerate() {
            let (wbuf, bbuf) = &mut adam[l];
            wbuf.update(
                step,
                layers[l].w.as_slice_mut().expect("standard layout"),
                dw.as_slice().expect("standard layout"),
                lr,
            );
            bbuf.update(
                step,
                layers[l].b.as_slice_mut().expect("standard layout"),
                db.as_slice().expect("standard layout"),
                lr,
            );
        }
    }
    let outputs = batch_forward(&layers, &x_train);
    let (final_loss, _) = cross_entropy(outputs.last().expect("stack"), &y_train);
    loss_history.push(final_loss);

    let train_accuracy = stack_accuracy(&layers, &x_train, &y_train);
    let test_accuracy = if test_idx.is_empty() {
        None
    } else {
        let (x_test, y_test) = design_matrix(dataset, &test_idx);
        Some(stack_accuracy(&layers, &x_test, &y_test))
    };

    let model = match architecture {
        Architecture::Mlp { .. } => {
            AnyClassifier::Mlp(MlpClassifier::from_layers(input_shape, layers))
        }
        Architecture::Linear => {
            let layer = layers.pop().expect("single layer");
            AnyClassifier::Linear(LinearClassifier::new(input_shape, layer.w, layer.b)?)
        }
    };
    let report = TrainReport { epochs, loss_history, train_accuracy, test_accuracy };
    Ok((model, report))
}

/// Fraction of the split the model classifies correctly.
pub fn split_accuracy(
    model: &dyn ClassifierModel,
    dataset: &MotionDataset,
    split: Split,
) -> Result<f64> {
    let indices = dataset.indices_of(split);
    if indices.is_empty() {
        return Err(Error::EmptyInput("split has no samples".into()));
    }
    let mut correct = 0usize;
    for &i in &indices {
        let motion = &dataset.motions()[i];
        let logits = model.forward(motion)?;
        if logits.argmax() == motion.label().expect("labeled") {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{generate_synthetic_dataset, SkeletonTopology, SyntheticSpec};
    use std::sync::Arc;

    fn small_dataset(seed: u64) -> MotionDataset {
        generate_synthetic_dataset(&SyntheticSpec {
            seed,
            class_count: 3,
            samples_per_class: 20,
            frame_count: 8,
            topology: Arc::new(SkeletonTopology::chain(6).unwrap()),
        })
        .unwrap()
    }

    #[test]
    fn same_seed_bit_identical_model() {
        let ds = small_dataset(3);
        let (a, _) = train_classifier(&ds, Architecture::Mlp { hidden: (16, 16) }, 5, 40, 1e-3).unwrap();
        let (b, _) = train_classifier(&ds, Architecture::Mlp { hidden: (16, 16) }, 5, 40, 1e-3).unwrap();
        match (&a, &b) {
            (AnyClassifier::Mlp(ma), AnyClassifier::Mlp(mb)) => assert_eq!(ma, mb),
            _ => panic!("expected mlp models"),
        }
    }

    #[test]
    fn loss_descends_on_separable_data() {
        let ds = small_dataset(4);
        let (_, report) =
            train_classifier(&ds, Architecture::Mlp { hidden: (16, 16) }, 1, 60, 1e-3).unwrap();
        assert!(report.loss_history[50] < report.loss_history[0]);
        assert!(report.final_loss() < report.initial_loss());
    }

    #[test]
    fn linear_architecture_trains() {
        let ds = small_dataset(9);
        let (model, report) = train_classifier(&ds, Architecture::Linear, 2, 120, 1e-2).unwrap();
        assert!(matches!(model, AnyClassifier::Linear(_)));
        assert!(report.train_accuracy > 0.8, "train accuracy {}", report.train_accuracy);
    }

    #[test]
    fn synthetic_families_reach_high_test_accuracy() {
        let ds = generate_synthetic_dataset(&SyntheticSpec {
            seed: 7,
            class_count: 5,
            samples_per_class: 25,
            frame_count: 12,
            topology: Arc::new(SkeletonTopology::chain(8).unwrap()),
        })
        .unwrap();
        let (model, report) =
            train_classifier(&ds, Architecture::Mlp { hidden: (32, 32) }, 1, 200, 1e-3).unwrap();
        assert!(
            report.test_accuracy.unwrap() >= 0.90,
            "test accuracy {:?}",
            report.test_accuracy
        );
        let acc = split_accuracy(&model, &ds, Split::Test).unwrap();
        assert!((acc - report.test_accuracy.unwrap()).abs() < 1e-12);
    }
}
