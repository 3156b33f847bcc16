//! Affine classifier over flattened coordinates.
//!
//! Logits are `W v + b`, which makes the minimal adversarial perturbation of
//! a two-class margin available in closed form for oracle tests.

use ndarray::{Array1, Array2, Array3};

use crate::classifier::mlp::{flatten_positions, unflatten_gradient};
use crate::classifier::{check_cotangent_len, check_motion_shape, ClassifierModel, Logits};
use crate::error::{Error, Result};
use crate::motion::SkeletonMotion;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    input_shape: (usize, usize),
    /// `class_count x (T*J*3)`.
    pub(crate) weights: Array2<f64>,
    pub(crate) bias: Array1<f64>,
}

impl LinearClassifier {
    pub fn new(input_shape: (usize, usize), weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        let n = input_shape.0 * input_shape.1 * 3;
        if weights.ncols() != n || weights.nrows() != bias.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x {n} weights with matching bias", bias.len()),
                actual: format!("{} x {} weights, bias {}", weights.nrows(), weights.ncols(), bias.len()),
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite classifier parameter".into()));
        }
        Ok(Self { input_shape, weights, bias })
    }

    pub fn zeros(input_shape: (usize, usize), class_count: usize) -> Self {
        let n = input_shape.0 * input_shape.1 * 3;
        Self {
            input_shape,
            weights: Array2::zeros((class_count, n)),
            bias: Array1::zeros(class_count),
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }
}

impl ClassifierModel for LinearClassifier {
    fn class_count(&self) -> usize {
        self.bias.len()
    }

    fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    fn forward(&self, motion: &SkeletonMotion) -> Result<Logits> {
        check_motion_shape(self.input_shape, motion)?;
        let v = flatten_positions(motion);
        Ok(Logits((self.weights.dot(&v) + &self.bias).to_vec()))
    }

    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>> {
        check_motion_shape(self.input_shape, motion)?;
        check_cotangent_len(self.class_count(), cotangent)?;
        let co = Array1::from_iter(cotangent.iter().cloned());
        let flat = self.weights.t().dot(&co);
        Ok(unflatten_gradient(&flat, self.input_shape))
    }
}
