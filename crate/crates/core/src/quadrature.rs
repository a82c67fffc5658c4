//! Symmetric quadrature rules on triangles.
//!
//! Points are barycentric coordinates, weights are normalized to sum to one
//! so that `area * sum(w_i f(x_i))` approximates the integral over a triangle.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a, b], [a, b, a], [b, a, a]] {
        points.push(p);
        weights.push(w);
    }
}

fn orbit6(a: f64, b: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

impl TriangleRule {
    /// Rule exact for polynomials of total degree `order`; `order` must be
    /// 2, 4 or 7.
    pub fn new(order: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match order {
            2 => orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points, &mut weights),
            4 => {
                orbit3(0.445948490915965, 0.223381589678011, &mut points, &mut weights);
                orbit3(0.091576213509771, 0.109951743655322, &mut points, &mut weights);
            }
            7 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(-0.149570044467682);
                orbit3(0.260345966079040, 0.175615257433208, &mut points, &mut weights);
                orbit3(0.065130102902216, 0.053347235608838, &mut points, &mut weights);
                orbit6(
                    0.048690315425316,
                    0.312865496004874,
                    0.077113760890257,
                    &mut points,
                    &mut weights,
                );
            }
            other => return Err(Error::UnsupportedQuadrature(other)),
        }
        Ok(Self {
            degree: order,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates `(barycentric point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` (given in barycentric coordinates) over a triangle of
    /// the given area.
    pub fn integrate(&self, area: f64, f: impl Fn([f64; 3]) -> f64) -> f64 {
        area * self.iter().map(|(p, w)| w * f(p)).sum::<f64>()
    }
}
