//! Pseudometric `delta_{K,alpha}` and metric `d_{K,alpha}` of the box
//! constrained problem.

use crate::error::{Error, Result};
use crate::fem::{check_box, clamped_difference_sq};
use crate::optsys::{BoxBounds, Discretization, C_F};

#[derive(Debug, Clone, Copy)]
pub struct ConstrainedMetrics<'a> {
    pub disc: &'a Discretization,
    pub alpha: f64,
    pub bounds: BoxBounds,
    /// Continuity constant `M_a`.
    pub big_m_a: f64,
    /// Coupling constant `M`.
    pub m: f64,
}

impl<'a> ConstrainedMetrics<'a> {
    pub fn new(disc: &'a Discretization, alpha: f64, bounds: BoxBounds) -> Result<Self> {
        check_box(bounds.lo, bounds.hi)?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            disc,
            alpha,
            bounds,
            big_m_a: 1.0,
            m: C_F,
        })
    }

    fn split<'v>(&self, v: &'v [f64]) -> Result<(&'v [f64], &'v [f64])> {
        let n = self.disc.n_dofs();
        if v.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "pair has {} entries, expected {}",
                v.len(),
                2 * n
            )));
        }
        Ok(v.split_at(n))
    }

    /// `delta^2 = alpha ||Pi(-v2/sqrt a) - Pi(-w2/sqrt a)||^2 + ||v1 - w1||^2`.
    pub fn delta(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        let (v1, v2) = self.split(v)?;
        let (w1, w2) = self.split(w)?;
        let d = &self.disc;
        let clamp = clamped_difference_sq(&d.mesh, &d.dofs, v2, w2, self.alpha, self.bounds.lo, self.bounds.hi)?;
        let diff: Vec<f64> = v1.iter().zip(w1).map(|(a, b)| a - b).collect();
        Ok((self.alpha * clamp + d.m.quad(&diff)).max(0.0).sqrt())
    }

    /// `|v1 - w1|_1^2 + |v2 - w2|_1^2`, square-rooted.
    pub fn product_distance(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        let (v1, v2) = self.split(v)?;
        let (w1, w2) = self.split(w)?;
        let d1: Vec<f64> = v1.iter().zip(w1).map(|(a, b)| a - b).collect();
        let d2: Vec<f64> = v2.iter().zip(w2).map(|(a, b)| a - b).collect();
        Ok((self.disc.k.quad(&d1) + self.disc.k.quad(&d2)).max(0.0).sqrt())
    }

    /// `d = M_a ||v - w|| + (M / sqrt(alpha)) delta(v, w)`.
    pub fn d(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        Ok(self.big_m_a * self.product_distance(v, w)? + self.m / self.alpha.sqrt() * self.delta(v, w)?)
    }
}
