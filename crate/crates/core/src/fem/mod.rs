//! P1 finite element assembly on [`TriMesh`].

pub mod clip;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{DofMap, Element, TriMesh};
use crate::quadrature::TriangleRule;
use crate::sparse::{CooBuilder, CsrMatrix};

use clip::{clamp_pieces, integrate_polygon, reference_triangle, Piece};

/// A real function on the unit square.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// A field with known gradient and Laplacian.
pub trait DifferentiableField: ScalarField {
    fn grad(&self, x: f64, y: f64) -> [f64; 2];
    fn laplacian(&self, x: f64, y: f64) -> f64;
}

pub type SharedField = Arc<dyn ScalarField>;

/// `a * sin(pi k x) sin(pi l y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMode {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
}

impl SineMode {
    pub fn new(amplitude: f64) -> Self {
        Self {
            amplitude,
            kx: 1.0,
            ky: 1.0,
        }
    }
}

impl ScalarField for SineMode {
    fn eval(&self, x: f64, y: f64) -> f64 {
        use std::f64::consts::PI;
        self.amplitude * (PI * self.kx * x).sin() * (PI * self.ky * y).sin()
    }
}

impl DifferentiableField for SineMode {
    fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        use std::f64::consts::PI;
        let (ax, ay) = (PI * self.kx, PI * self.ky);
        [
            self.amplitude * ax * (ax * x).cos() * (ay * y).sin(),
            self.amplitude * ay * (ax * x).sin() * (ay * y).cos(),
        ]
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        use std::f64::consts::PI;
        let k2 = PI * PI * (self.kx * self.kx + self.ky * self.ky);
        -k2 * self.eval(x, y)
    }
}

/// Affine field `c + a x + b y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl ScalarField for Affine {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.c + self.a * x + self.b * y
    }
}

impl DifferentiableField for Affine {
    fn grad(&self, _: f64, _: f64) -> [f64; 2] {
        [self.a, self.b]
    }

    fn laplacian(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

fn check_dofs(dofs: &DofMap, mesh: &TriMesh) -> Result<()> {
    if dofs.n_vertices() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "dof map covers {} vertices, mesh has {}",
            dofs.n_vertices(),
            mesh.n_vertices()
        )));
    }
    dofs.require_nonempty()
}

fn check_len(x: &[f64], dofs: &DofMap) -> Result<()> {
    if x.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries, expected {}",
            x.len(),
            dofs.n_dofs()
        )));
    }
    Ok(())
}

/// Validates a control box: `lo <= hi`, neither NaN.
pub fn check_box(lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidBox { lo, hi });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Pointwise projection onto `[lo, hi]`.
pub fn project_box(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

fn assemble_local(
    mesh: &TriMesh,
    dofs: &DofMap,
    local: impl Fn(&Element) -> [[f64; 3]; 3],
) -> Result<CsrMatrix> {
    check_dofs(dofs, mesh)?;
    let n = dofs.n_dofs();
    let mut coo = CooBuilder::with_capacity(n, n, 9 * mesh.n_triangles());
    for e in mesh.elements() {
        let m = local(&e);
        let ids = e.nodes.map(|v| dofs.dof(v));
        for a in 0..3 {
            let Some(i) = ids[a] else { continue };
            for b in 0..3 {
                if let Some(j) = ids[b] {
                    coo.push(i, j, m[a][b]);
                }
            }
        }
    }
    Ok(coo.build())
}

fn local_stiffness(e: &Element) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let (ga, gb) = (e.grads[a], e.grads[b]);
            m[a][b] = e.area * (ga[0] * gb[0] + ga[1] * gb[1]);
        }
    }
    m
}

fn local_mass(e: &Element) -> [[f64; 3]; 3] {
    let d = e.area / 6.0;
    let o = e.area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Stiffness matrix of `a(v, w) = int grad v . grad w`.
pub fn assemble_stiffness(mesh: &TriMesh, dofs: &DofMap) -> Result<CsrMatrix> {
    assemble_local(mesh, dofs, local_stiffness)
}

/// L2 mass matrix.
pub fn assemble_mass(mesh: &TriMesh, dofs: &DofMap) -> Result<CsrMatrix> {
    assemble_local(mesh, dofs, local_mass)
}

/// Gram matrix of the elementwise mean projection:
/// `x^T G y = sum_T |T| mean_T(v) mean_T(w)`.
pub fn p0_gram(mesh: &TriMesh, dofs: &DofMap) -> Result<CsrMatrix> {
    assemble_local(mesh, dofs, |e| [[e.area / 9.0; 3]; 3])
}

/// `F_i = int f phi_i` by the symmetric rule of the given order.
pub fn assemble_load(
    mesh: &TriMesh,
    dofs: &DofMap,
    f: &dyn ScalarField,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let rule = TriangleRule::new(quad_order)?;
    check_dofs(dofs, mesh)?;
    let mut out = vec![0.0; dofs.n_dofs()];
    for e in mesh.elements() {
        let mut local = [0.0; 3];
        for (lambda, w) in rule.iter() {
            let p = e.point(lambda);
            let fv = w * f.eval(p[0], p[1]);
            for a in 0..3 {
                local[a] += fv * lambda[a];
            }
        }
        for a in 0..3 {
            if let Some(i) = dofs.dof(e.nodes[a]) {
                out[i] += e.area * local[a];
            }
        }
    }
    Ok(out)
}

/// Mean of the P1 function with coefficients `x` on every triangle.
pub fn element_means(mesh: &TriMesh, dofs: &DofMap, x: &[f64]) -> Result<Vec<f64>> {
    check_len(x, dofs)?;
    let nodal = dofs.to_nodal(x);
    Ok(mesh
        .triangles()
        .iter()
        .map(|t| (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0)
        .collect())
}

/// Nodal values of `-z_h / sqrt(alpha)` on one element (zero on the boundary).
fn control_nodal(e: &Element, nodal_z: &[f64], scale: f64) -> [f64; 3] {
    e.nodes.map(|v| -nodal_z[v] * scale)
}

fn prepare_clamp(
    mesh: &TriMesh,
    dofs: &DofMap,
    z: &[f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<Vec<f64>> {
    check_box(q_lo, q_hi)?;
    check_alpha(alpha)?;
    check_dofs(dofs, mesh)?;
    check_len(z, dofs)?;
    Ok(dofs.to_nodal(z))
}

/// `N(z)_i = int clamp(-z_h / sqrt(alpha), q_lo, q_hi) phi_i`, integrated
/// exactly by subdividing every triangle along the level sets of the bounds.
/// Unbounded sides may be given as infinities or as `+-1e308`.
pub fn assemble_clamped_term(
    mesh: &TriMesh,
    dofs: &DofMap,
    z: &[f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<Vec<f64>> {
    let nodal = prepare_clamp(mesh, dofs, z, alpha, q_lo, q_hi)?;
    let scale = 1.0 / alpha.sqrt();
    let rule = TriangleRule::new(4)?;
    let tri = reference_triangle();
    let mut out = vec![0.0; dofs.n_dofs()];
    for e in mesh.elements() {
        let g = control_nodal(&e, &nodal, scale);
        let mut local = [0.0; 3];
        for (poly, piece) in clamp_pieces(&tri, g, q_lo, q_hi) {
            if piece == Piece::Linear && poly.len() == 3 && poly == tri {
                let m = local_mass(&e);
                for a in 0..3 {
                    local[a] += m[a][0] * g[0] + m[a][1] * g[1] + m[a][2] * g[2];
                }
                continue;
            }
            for a in 0..3 {
                local[a] += integrate_polygon(&poly, e.area, &rule, |l| piece.value(g, l) * l[a]);
            }
        }
        for a in 0..3 {
            if let Some(i) = dofs.dof(e.nodes[a]) {
                out[i] += local[a];
            }
        }
    }
    Ok(out)
}

/// Same integrand as [`assemble_clamped_term`] evaluated by plain quadrature
/// of the given order (inexact across the kinks; for cross-checking).
pub fn assemble_clamped_term_quadrature(
    mesh: &TriMesh,
    dofs: &DofMap,
    z: &[f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let nodal = prepare_clamp(mesh, dofs, z, alpha, q_lo, q_hi)?;
    let rule = TriangleRule::new(quad_order)?;
    let scale = 1.0 / alpha.sqrt();
    let mut out = vec![0.0; dofs.n_dofs()];
    for e in mesh.elements() {
        let g = control_nodal(&e, &nodal, scale);
        for a in 0..3 {
            if let Some(i) = dofs.dof(e.nodes[a]) {
                out[i] += rule.integrate(e.area, |l| {
                    project_box(clip::dot(g, l), q_lo, q_hi) * l[a]
                });
            }
        }
    }
    Ok(out)
}

/// Mass matrix restricted to the inactive set `q_lo < -z_h/sqrt(alpha) < q_hi`:
/// the Newton derivative of `N` is `-(1/sqrt(alpha))` times this matrix.
pub fn assemble_inactive_mass(
    mesh: &TriMesh,
    dofs: &DofMap,
    z: &[f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<CsrMatrix> {
    let nodal = prepare_clamp(mesh, dofs, z, alpha, q_lo, q_hi)?;
    let scale = 1.0 / alpha.sqrt();
    let rule = TriangleRule::new(4)?;
    let tri = reference_triangle();
    assemble_local(mesh, dofs, |e| {
        let g = control_nodal(e, &nodal, scale);
        let mut m = [[0.0; 3]; 3];
        for (poly, piece) in clamp_pieces(&tri, g, q_lo, q_hi) {
            if piece != Piece::Linear {
                continue;
            }
            if poly == tri {
                return local_mass(e);
            }
            for a in 0..3 {
                for b in a..3 {
                    let v = integrate_polygon(&poly, e.area, &rule, |l| l[a] * l[b]);
                    m[a][b] += v;
                    if a != b {
                        m[b][a] += v;
                    }
                }
            }
        }
        m
    })
}

/// `int (clamp(-z1_h/sqrt(alpha)) - clamp(-z2_h/sqrt(alpha)))^2`, exact.
pub fn clamped_difference_sq(
    mesh: &TriMesh,
    dofs: &DofMap,
    z1: &[f64],
    z2: &[f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<f64> {
    let n1 = prepare_clamp(mesh, dofs, z1, alpha, q_lo, q_hi)?;
    check_len(z2, dofs)?;
    let n2 = dofs.to_nodal(z2);
    let scale = 1.0 / alpha.sqrt();
    let rule = TriangleRule::new(4)?;
    let tri = reference_triangle();
    let mut total = 0.0;
    for e in mesh.elements() {
        let g1 = control_nodal(&e, &n1, scale);
        let g2 = control_nodal(&e, &n2, scale);
        for (p1, piece1) in clamp_pieces(&tri, g1, q_lo, q_hi) {
            for (p2, piece2) in clamp_pieces(&p1, g2, q_lo, q_hi) {
                total += integrate_polygon(&p2, e.area, &rule, |l| {
                    let d = piece1.value(g1, l) - piece2.value(g2, l);
                    d * d
                });
            }
        }
    }
    Ok(total)
}
