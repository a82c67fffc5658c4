//! Exact integration of clamped affine functions on triangles.
//!
//! Polygons are stored in barycentric coordinates of their parent triangle,
//! so an affine function with nodal values `g` is `g . lambda` everywhere.
//! A triangle is cut along the level sets `g = lo` and `g = hi` into pieces
//! on which `clamp(g, lo, hi)` is affine, and each piece is integrated with a
//! fan triangulation and a rule exact for the (low degree) integrand.

use crate::quadrature::TriangleRule;

pub type Bary = [f64; 3];
pub type Polygon = Vec<Bary>;

/// How the clamped function behaves on a piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// Clamped to a bound.
    Const(f64),
    /// Inactive: equal to the affine function itself.
    Linear,
}

impl Piece {
    pub fn value(self, g: [f64; 3], lambda: Bary) -> f64 {
        match self {
            Piece::Const(c) => c,
            Piece::Linear => dot(g, lambda),
        }
    }
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn reference_triangle() -> Polygon {
    vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// Sutherland-Hodgman clip against the half plane `sign * (g - level) >= 0`.
pub fn clip(poly: &[Bary], g: [f64; 3], level: f64, sign: f64) -> Polygon {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    let dist: Vec<f64> = poly.iter().map(|&p| sign * (dot(g, p) - level)).collect();
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let (dp, dq) = (dist[k], dist[(k + 1) % n]);
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
            let t = dp / (dp - dq);
            out.push([
                p[0] + t * (q[0] - p[0]),
                p[1] + t * (q[1] - p[1]),
                p[2] + t * (q[2] - p[2]),
            ]);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Splits `poly` into the pieces where `clamp(g, lo, hi)` is `lo`, `g`, `hi`.
/// Empty pieces are dropped. Unbounded sides (infinite or huge sentinels)
/// simply never produce a clamped piece.
pub fn clamp_pieces(poly: &[Bary], g: [f64; 3], lo: f64, hi: f64) -> Vec<(Polygon, Piece)> {
    let vals: Vec<f64> = poly.iter().map(|&p| dot(g, p)).collect();
    let (gmin, gmax) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if gmax <= lo {
        return vec![(poly.to_vec(), Piece::Const(lo))];
    }
    if gmin >= hi {
        return vec![(poly.to_vec(), Piece::Const(hi))];
    }
    if gmin >= lo && gmax <= hi {
        return vec![(poly.to_vec(), Piece::Linear)];
    }
    let mut pieces = Vec::with_capacity(3);
    if gmin < lo {
        let low = clip(poly, g, lo, -1.0);
        if !low.is_empty() {
            pieces.push((low, Piece::Const(lo)));
        }
    }
    let mid = clip(&clip(poly, g, lo, 1.0), g, hi, -1.0);
    if !mid.is_empty() {
        pieces.push((mid, Piece::Linear));
    }
    if gmax > hi {
        let high = clip(poly, g, hi, 1.0);
        if !high.is_empty() {
            pieces.push((high, Piece::Const(hi)));
        }
    }
    pieces
}

fn det3(a: Bary, b: Bary, c: Bary) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Integral of `f(lambda)` over `poly`, where `area` is the area of the
/// parent triangle. Exact when `f` is a polynomial of degree <= `rule.degree`.
pub fn integrate_polygon(
    poly: &[Bary],
    area: f64,
    rule: &TriangleRule,
    mut f: impl FnMut(Bary) -> f64,
) -> f64 {
    let mut total = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let sub_area = area * det3(a, b, c).abs();
        if sub_area == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for (mu, w) in rule.iter() {
            let lambda = [
                mu[0] * a[0] + mu[1] * b[0] + mu[2] * c[0],
                mu[0] * a[1] + mu[1] * b[1] + mu[2] * c[1],
                mu[0] * a[2] + mu[1] * b[2] + mu[2] * c[2],
            ];
            s += w * f(lambda);
        }
        total += sub_area * s;
    }
    total
}

/// Fraction of the parent triangle covered by `poly`.
pub fn polygon_area_fraction(poly: &[Bary]) -> f64 {
    (1..poly.len().saturating_sub(1))
        .map(|k| det3(poly[0], poly[k], poly[k + 1]).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_halves_triangle() {
        // g = lambda_1; g >= 1/2 is the corner triangle at vertex 1 with area 1/4
        let tri = reference_triangle();
        let g = [0.0, 1.0, 0.0];
        let upper = clip(&tri, g, 0.5, 1.0);
        let lower = clip(&tri, g, 0.5, -1.0);
        assert!((polygon_area_fraction(&upper) - 0.25).abs() < 1e-15);
        assert!((polygon_area_fraction(&lower) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pieces_partition_the_triangle() {
        let tri = reference_triangle();
        for (g, lo, hi) in [
            ([-1.0, 0.5, 2.0], 0.0, 1.0),
            ([0.3, 0.3, 0.3], 0.0, 1.0),
            ([5.0, -5.0, 0.0], -1e308, 1e308),
            ([5.0, -5.0, 0.0], f64::NEG_INFINITY, 0.0),
            ([1.0, 2.0, 3.0], 1.5, 1.5),
        ] {
            let pieces = clamp_pieces(&tri, g, lo, hi);
            let sum: f64 = pieces.iter().map(|(p, _)| polygon_area_fraction(p)).sum();
            assert!((sum - 1.0).abs() < 1e-14, "{g:?} [{lo}, {hi}]: {sum}");
        }
    }

    #[test]
    fn clamped_integral_of_one_dimensional_ramp() {
        // g = 2 lambda_1 - 1 on the reference triangle (area 1/2);
        // the distribution of lambda_1 over the triangle has density 2(1-t)
        let tri = reference_triangle();
        let g = [-1.0, 1.0, -1.0];
        let rule = TriangleRule::new(4).unwrap();
        let integral: f64 = clamp_pieces(&tri, g, 0.0, 0.5)
            .into_iter()
            .map(|(p, piece)| integrate_polygon(&p, 0.5, &rule, |l| piece.value(g, l)))
            .sum();
        // 0.5 * int_0^1 clamp(2t-1, 0, 0.5) 2(1-t) dt
        let oracle = {
            let n = 200_000;
            let dt = 1.0 / n as f64;
            (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) * dt;
                    (2.0 * t - 1.0).clamp(0.0, 0.5) * 2.0 * (1.0 - t) * dt
                })
                .sum::<f64>()
                * 0.5
        };
        assert!((integral - oracle).abs() < 1e-10, "{integral} vs {oracle}");
    }
}
