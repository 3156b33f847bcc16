//! Central finite differences over every coordinate of a motion; the
//! independent oracle all analytic gradients are checked against.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::motion::SkeletonMotion;

/// `(f(x + h e_i) - f(x - h e_i)) / (2 h)` for every coordinate `i`.
pub fn finite_difference_gradient<F>(
    mut f: F,
    x: &SkeletonMotion,
    h: f64,
) -> Result<Array3<f64>>
where
    F: FnMut(&SkeletonMotion) -> Result<f64>,
{
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
    }
    let dim = x.positions().dim();
    let mut grad = Array3::zeros(dim);
    let mut probe = x.positions().clone();
    for t in 0..dim.0 {
        for j in 0..dim.1 {
            for c in 0..dim.2 {
                let original = probe[[t, j, c]];
                probe[[t, j, c]] = original + h;
                let plus = f(&x.with_positions(probe.clone())?)?;
                probe[[t, j, c]] = original - h;
                let minus = f(&x.with_positions(probe.clone())?)?;
                probe[[t, j, c]] = original;
                grad[[t, j, c]] = (plus - minus) / (2.0 * h);
            }
        }
    }
    Ok(grad)
}
