//! The 4x4 example showing that the inf-sup constant of the reduced system
//! with test norm `|| . ||_alpha` degenerates like `sqrt(alpha)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::inf_sup_constant;

/// `B = [[-s I*I, A*], [A, s C C*]]` with `A = I_2`, `I = diag(1, 0)`,
/// `C = diag(0, 1)` and `s = 1/sqrt(alpha)`.
pub fn sharpness_matrix(alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let s = 1.0 / alpha.sqrt();
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(4, 4, &[
        -s,  0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, s,
    ]);
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpnessRow {
    pub alpha: f64,
    pub computed: f64,
    /// `sqrt(alpha / 2)`.
    pub bound: f64,
}

impl SharpnessRow {
    pub fn holds(&self) -> bool {
        self.computed <= self.bound + 1e-12
    }
}

/// Inf-sup of the example with trial norm `|| . ||` (identity Gram) and the
/// Hilbert form of `|| . ||_alpha` (`M_a = M = 1`) as test norm. The Hilbert
/// form is below the sum form, so the computed value bounds the sum-norm
/// constant from above.
pub fn sharpness_inf_sup(alpha: f64) -> Result<SharpnessRow> {
    let b = sharpness_matrix(alpha)?;
    let trial = DMatrix::identity(4, 4);
    let mut test = DMatrix::identity(4, 4);
    test[(0, 0)] += 1.0 / alpha;
    test[(3, 3)] += 1.0 / alpha;
    Ok(SharpnessRow {
        alpha,
        computed: inf_sup_constant(&b, &trial, &test)?,
        bound: (alpha / 2.0).sqrt(),
    })
}
