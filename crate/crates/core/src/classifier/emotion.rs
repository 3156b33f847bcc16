//! Group-structured emotion feature extractor.
//!
//! Joints are partitioned into groups (limbs/torso at full scale); each group
//! is temporally mean-pooled and linearly projected to a few features, and
//! the concatenation forms the emotion embedding. Deterministic seeded
//! weights stand in for a pretrained recognizer.

use ndarray::{Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::{check_cotangent_len, check_motion_shape, EmotionExtractor};
use crate::error::{Error, Result};
use crate::motion::SkeletonMotion;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedEmotionExtractor {
    input_shape: (usize, usize),
    groups: Vec<Vec<usize>>,
    /// Per group: `features_per_group x (3 * group_size)`.
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
}

impl GroupedEmotionExtractor {
    pub fn new(
        input_shape: (usize, usize),
        groups: Vec<Vec<usize>>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        let j = input_shape.1;
        let mut seen = vec![false; j];
        for g in &groups {
            for &joint in g {
                if joint >= j {
                    return Err(Error::InvalidConfig(format!(
                        "group joint {joint} outside [0,{j})"
                    )));
                }
                if std::mem::replace(&mut seen[joint], true) {
                    return Err(Error::InvalidConfig(format!(
                        "joint {joint} appears in more than one group"
                    )));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidConfig("groups must partition all joints".into()));
        }
        if weights.len() != groups.len() || biases.len() != groups.len() {
            return Err(Error::InvalidConfig("one weight/bias block per group required".into()));
        }
        for (g, (w, b)) in groups.iter().zip(weights.iter().zip(&biases)) {
            if w.ncols() != 3 * g.len() || w.nrows() != b.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} x {} group projection", b.len(), 3 * g.len()),
                    actual: format!("{} x {}", w.nrows(), w.ncols()),
                });
            }
        }
        Ok(Self { input_shape, groups, weights, biases })
    }

    /// Four contiguous joint chunks, sizes as equal as possible.
    pub fn default_groups(joint_count: usize) -> Vec<Vec<usize>> {
        let group_count = 4.min(joint_count);
        let mut groups = Vec::with_capacity(group_count);
        let base = joint_count / group_count;
        let extra = joint_count % group_count;
        let mut next = 0;
        for g in 0..group_count {
            let size = base + usize::from(g < extra);
            groups.push((next..next + size).collect());
            next += size;
        }
        groups
    }

    /// Seeded Gaussian projection weights, zero biases, 4 features per group.
    pub fn seeded(input_shape: (usize, usize), seed: u64) -> Self {
        Self::seeded_with(input_shape, Self::default_groups(input_shape.1), 4, seed)
    }

    pub fn seeded_with(
        input_shape: (usize, usize),
        groups: Vec<Vec<usize>>,
        features_per_group: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(groups.len());
        let mut biases = Vec::with_capacity(groups.len());
        for g in &groups {
            let in_dim = 3 * g.len();
            let normal = Normal::new(0.0, 1.0 / (in_dim as f64).sqrt()).expect("valid sigma");
            weights.push(Array2::from_shape_fn((features_per_group, in_dim), |_| {
                normal.sample(&mut rng)
            }));
            biases.push(Array1::zeros(features_per_group));
        }
        Self::new(input_shape, groups, weights, biases).expect("seeded extractor is valid")
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn pooled_group(&self, motion: &SkeletonMotion, g: usize) -> Array1<f64> {
        let pos = motion.positions();
        let t_count = motion.frame_count() as f64;
        let group = &self.groups[g];
        let mut pooled = Array1::zeros(3 * group.len());
        for (local, &joint) in group.iter().enumerate() {
            for c in 0..3 {
                let mut sum = 0.0;
                for t in 0..motion.frame_count() {
                    sum += pos[[t, joint, c]];
                }
                pooled[3 * local + c] = sum / t_count;
            }
        }
        pooled
    }
}

impl EmotionExtractor for GroupedEmotionExtractor {
    fn feature_dim(&self) -> usize {
        self.biases.iter().map(Array1::len).sum()
    }

    fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    fn features(&self, motion: &SkeletonMotion) -> Result<Vec<f64>> {
        check_motion_shape(self.input_shape, motion)?;
        let mut out = Vec::with_capacity(self.feature_dim());
        for g in 0..self.groups.len() {
            let pooled = self.pooled_group(motion, g);
            let f = self.weights[g].dot(&pooled) + &self.biases[g];
            out.extend(f.iter());
        }
        Ok(out)
    }

    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>> {
        check_motion_shape(self.input_shape, motion)?;
        check_cotangent_len(self.feature_dim(), cotangent)?;
        let (t_count, j_count) = self.input_shape;
        let mut grad = Array3::zeros((t_count, j_count, 3));
        let inv_t = 1.0 / t_count as f64;
        let mut offset = 0;
        for (g, group) in self.groups.iter().enumerate() {
            let w = &self.weights[g];
            for (local, &joint) in group.iter().enumerate() {
                for c in 0..3 {
                    let mut pooled_grad = 0.0;
                    for k in 0..w.nrows() {
                        pooled_grad += cotangent[offset + k] * w[[k, 3 * local + c]];
                    }
                    let per_frame = pooled_grad * inv_t;
                    for t in 0..t_count {
                        grad[[t, joint, c]] = per_frame;
                    }
                }
            }
            offset += w.nrows();
        }
        Ok(grad)
    }
}
