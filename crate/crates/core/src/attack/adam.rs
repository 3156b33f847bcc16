//! Adam state over motion coordinates, plus the box projection.

use ndarray::Array3;

use crate::error::{Error, Result};

/// Adam moment decay and stabilizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment estimates and the step counter for one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Array3<f64>,
    v: Array3<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(shape: (usize, usize, usize)) -> Self {
        Self { m: Array3::zeros(shape), v: Array3::zeros(shape), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam step; returns the position delta to apply.
pub fn adam_step(
    state: &mut AdamState,
    gradient: &Array3<f64>,
    lr: f64,
    params: &AdamParams,
) -> Result<Array3<f64>> {
    if gradient.dim() != state.m.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", state.m.dim()),
            actual: format!("{:?}", gradient.dim()),
        });
    }
    state.step += 1;
    let bc1 = 1.0 - params.beta1.powi(state.step as i32);
    let bc2 = 1.0 - params.beta2.powi(state.step as i32);
    let mut delta = Array3::zeros(gradient.dim());
    for ((d, g), (m, v)) in delta
        .iter_mut()
        .zip(gradient.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = params.beta1 * *m + (1.0 - params.beta1) * g;
        *v = params.beta2 * *v + (1.0 - params.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *d = -lr * m_hat / (v_hat.sqrt() + params.epsilon);
    }
    Ok(delta)
}

/// Clamp every coordinate to `[0, 1]`. Idempotent; identity on in-range input.
pub fn project_box(positions: &Array3<f64>) -> Array3<f64> {
    positions.mapv(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_a_bias_corrected_sign_step() {
        let shape = (2, 3, 3);
        let mut state = AdamState::new(shape);
        let grad = Array3::from_elem(shape, 0.75);
        let lr = 5e-3;
        let delta = adam_step(&mut state, &grad, lr, &AdamParams::default()).unwrap();
        for &d in delta.iter() {
            assert!((d.abs() - lr).abs() < 1e-6);
            assert!(d < 0.0, "descends against a positive gradient");
        }
    }

    #[test]
    fn zero_gradient_never_moves() {
        let shape = (1, 2, 3);
        let mut state = AdamState::new(shape);
        let grad = Array3::zeros(shape);
        for _ in 0..10 {
            let delta = adam_step(&mut state, &grad, 1e-2, &AdamParams::default()).unwrap();
            assert!(delta.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let shape = (2, 2, 3);
        let grad = Array3::from_shape_fn(shape, |(a, b, c)| ((a + 2 * b + 3 * c) as f64).sin());
        let run = || {
            let mut state = AdamState::new(shape);
            let mut deltas = Vec::new();
            for _ in 0..5 {
                deltas.push(adam_step(&mut state, &grad, 3e-3, &AdamParams::default()).unwrap());
            }
            (state, deltas)
        };
        let (sa, da) = run();
        let (sb, db) = run();
        assert_eq!(sa, sb);
        assert_eq!(da, db);
    }

    #[test]
    fn projection_clamps_and_is_idempotent() {
        let mut pos = Array3::from_elem((1, 2, 3), 0.5);
        pos[[0, 0, 0]] = 1.2;
        pos[[0, 1, 2]] = -0.3;
        let once = project_box(&pos);
        assert_eq!(once[[0, 0, 0]], 1.0);
        assert_eq!(once[[0, 1, 2]], 0.0);
        assert_eq!(once[[0, 0, 1]], 0.5);
        assert_eq!(project_box(&once), once);
    }
}
