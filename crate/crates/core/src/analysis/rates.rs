//! Least-squares convergence rates.

use crate::error::{Error, Result};

/// Slope of the least-squares line through `(log h_i, log e_i)`.
pub fn fit_rate(h: &[f64], err: &[f64]) -> Result<f64> {
    if h.len() != err.len() {
        return Err(Error::DimensionMismatch("h and error lists differ in length".into()));
    }
    if h.len() < 2 {
        return Err(Error::InvalidParameter("a rate needs at least two points".into()));
    }
    if h.iter().chain(err).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("rates need positive finite data".into()));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
