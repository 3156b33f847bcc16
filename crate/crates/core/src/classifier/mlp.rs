//! Two-hidden-layer tanh MLP over flattened joint coordinates.
//!
//! Tanh keeps the map smooth everywhere, so finite-difference gradient checks
//! carry no subgradient caveats.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::classifier::{check_cotangent_len, check_motion_shape, ClassifierModel, Logits};
use crate::error::Result;
use crate::motion::SkeletonMotion;

/// One dense layer `z = W h + b` with an optional tanh.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DenseLayer {
    /// `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub tanh: bool,
}

impl DenseLayer {
    pub(crate) fn seeded(out_dim: usize, in_dim: usize, tanh: bool, rng: &mut ChaCha12Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-bound..bound));
        Self { w, b: Array1::zeros(out_dim), tanh }
    }

    pub(crate) fn apply(&self, input: &Array1<f64>) -> Array1<f64> {
        let mut z = self.w.dot(input) + &self.b;
        if self.tanh {
            z.mapv_inplace(f64::tanh);
        }
        z
    }
}

/// Flatten `T x J x 3` coordinates in `(frame, joint, axis)` order.
pub(crate) fn flatten_positions(motion: &SkeletonMotion) -> Array1<f64> {
    Array1::from_iter(motion.positions().iter().cloned())
}

pub(crate) fn unflatten_gradient(flat: &Array1<f64>, shape: (usize, usize)) -> Array3<f64> {
    Array3::from_shape_vec((shape.0, shape.1, 3), flat.to_vec())
        .expect("gradient length matches motion shape")
}

/// Desk-scale victim: `T·J·3 -> H1 -> H2 -> classes` with tanh hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    input_shape: (usize, usize),
    pub(crate) layers: Vec<DenseLayer>,
}

impl MlpClassifier {
    /// Seeded Xavier-uniform initialization, zero biases.
    pub fn seeded(
        input_shape: (usize, usize),
        hidden: (usize, usize),
        class_count: usize,
        seed: u64,
    ) -> Self {
        let n = input_shape.0 * input_shape.1 * 3;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let layers = vec![
            DenseLayer::seeded(hidden.0, n, true, &mut rng),
            DenseLayer::seeded(hidden.1, hidden.0, true, &mut rng),
            DenseLayer::seeded(class_count, hidden.1, false, &mut rng),
        ];
        Self { input_shape, layers }
    }

    pub(crate) fn from_layers(input_shape: (usize, usize), layers: Vec<DenseLayer>) -> Self {
        Self { input_shape, layers }
    }

    /// Forward pass keeping every layer output; used by backprop.
    pub(crate) fn forward_trace(&self, input: &Array1<f64>) -> Vec<Array1<f64>> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut h = input.clone();
        for layer in &self.layers {
            h = layer.apply(&h);
            outputs.push(h.clone());
        }
        outputs
    }

    /// Gradient of `<logits, cotangent>` w.r.t. the flat input.
    pub(crate) fn backward_input(
        &self,
        input: &Array1<f64>,
        outputs: &[Array1<f64>],
        cotangent: &[f64],
    ) -> Array1<f64> {
        let _ = input;
        let mut g = Array1::from_iter(cotangent.iter().cloned());
        for (layer, out) in self.layers.iter().zip(outputs).rev() {
            if layer.tanh {
                g = &g * &out.mapv(|h| 1.0 - h * h);
            }
            g = layer.w.t().dot(&g);
        }
        g
    }
}

impl ClassifierModel for MlpClassifier {
    fn class_count(&self) -> usize {
        self.layers.last().expect("mlp has layers").b.len()
    }

    fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    fn forward(&self, motion: &SkeletonMotion) -> Result<Logits> {
        check_motion_shape(self.input_shape, motion)?;
        let mut h = flatten_positions(motion);
        for layer in &self.layers {
            h = layer.apply(&h);
        }
        Ok(Logits(h.to_vec()))
    }

    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>> {
        check_motion_shape(self.input_shape, motion)?;
        check_cotangent_len(self.class_count(), cotangent)?;
        let input = flatten_positions(motion);
        let outputs = self.forward_trace(&input);
        let flat = self.backward_input(&input, &outputs, cotangent);
        Ok(unflatten_gradient(&flat, self.input_shape))
    }
}
