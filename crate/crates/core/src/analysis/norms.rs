//! Discrete norms on `V_h = V_h1 x V_h2` and errors against exact fields.

use crate::error::{Error, Result};
use crate::fem::{DifferentiableField, ScalarField};
use crate::mesh::{DofMap, TriMesh};
use crate::quadrature::TriangleRule;
use crate::sparse::CsrMatrix;

/// Quadrature order used for all errors against exact fields.
pub const ERROR_QUAD_ORDER: usize = 7;

/// Norm evaluators built from assembled matrices of one dof map.
#[derive(Debug, Clone, Copy)]
pub struct Norms<'a> {
    pub k: &'a CsrMatrix,
    pub m: &'a CsrMatrix,
    /// Gram of the control component of the seminorm: `M`, or `G` for
    /// piecewise constant control.
    pub control: &'a CsrMatrix,
}

impl<'a> Norms<'a> {
    pub fn new(k: &'a CsrMatrix, m: &'a CsrMatrix, control: &'a CsrMatrix) -> Result<Self> {
        let n = k.n_rows();
        for a in [k, m, control] {
            if a.n_rows() != n || a.n_cols() != n {
                return Err(Error::DimensionMismatch("norm matrices differ in size".into()));
            }
        }
        Ok(Self { k, m, control })
    }

    pub fn n(&self) -> usize {
        self.k.n_rows()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} entries, expected {}",
                v.len(),
                self.n()
            )));
        }
        Ok(())
    }

    fn check_pair(&self, v: &[f64]) -> Result<()> {
        if v.len() != 2 * self.n() {
            return Err(Error::DimensionMismatch(format!(
                "pair has {} entries, expected {}",
                v.len(),
                2 * self.n()
            )));
        }
        Ok(())
    }

    pub fn h1_semi(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(self.k.quad(v).max(0.0).sqrt())
    }

    pub fn l2(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(self.m.quad(v).max(0.0).sqrt())
    }

    /// `(|v1|_1^2 + |v2|_1^2)^{1/2}` for stacked `v = (v1, v2)`.
    pub fn product(&self, v: &[f64]) -> Result<f64> {
        self.check_pair(v)?;
        let (a, b) = v.split_at(self.n());
        Ok((self.k.quad(a) + self.k.quad(b)).max(0.0).sqrt())
    }

    /// `(||I v1||^2 + ||C* v2||^2)^{1/2}`.
    pub fn seminorm(&self, v: &[f64]) -> Result<f64> {
        self.check_pair(v)?;
        let (a, b) = v.split_at(self.n());
        Ok((self.m.quad(a) + self.control.quad(b)).max(0.0).sqrt())
    }

    /// `M_a ||v|| + (M / sqrt(alpha)) |v|`.
    pub fn alpha_norm(&self, v: &[f64], big_m_a: f64, m: f64, alpha: f64) -> Result<f64> {
        Ok(big_m_a * self.product(v)? + m / alpha.sqrt() * self.seminorm(v)?)
    }
}

/// `||u - u_h||_{L2}` by the order-7 rule.
pub fn l2_error(mesh: &TriMesh, dofs: &DofMap, x: &[f64], exact: &dyn ScalarField) -> Result<f64> {
    if x.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch("coefficient vector does not match dofs".into()));
    }
    let rule = TriangleRule::new(ERROR_QUAD_ORDER)?;
    let nodal = dofs.to_nodal(x);
    let mut total = 0.0;
    for e in mesh.elements() {
        let v = e.nodes.map(|n| nodal[n]);
        total += rule.integrate(e.area, |l| {
            let p = e.point(l);
            let d = v[0] * l[0] + v[1] * l[1] + v[2] * l[2] - exact.eval(p[0], p[1]);
            d * d
        });
    }
    Ok(total.sqrt())
}

/// `|u - u_h|_{H1}` by the order-7 rule.
pub fn h1_semi_error(
    mesh: &TriMesh,
    dofs: &DofMap,
    x: &[f64],
    exact: &dyn DifferentiableField,
) -> Result<f64> {
    if x.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch("coefficient vector does not match dofs".into()));
    }
    let rule = TriangleRule::new(ERROR_QUAD_ORDER)?;
    let nodal = dofs.to_nodal(x);
    let mut total = 0.0;
    for e in mesh.elements() {
        let mut g = [0.0; 2];
        for a in 0..3 {
            g[0] += nodal[e.nodes[a]] * e.grads[a][0];
            g[1] += nodal[e.nodes[a]] * e.grads[a][1];
        }
        total += rule.integrate(e.area, |l| {
            let p = e.point(l);
            let ge = exact.grad(p[0], p[1]);
            (g[0] - ge[0]).powi(2) + (g[1] - ge[1]).powi(2)
        });
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness, Affine, SineMode};
    use crate::mesh::interpolate;
    use crate::optsys::C_F;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_vector_has_zero_norms() {
        let mesh = TriMesh::build_uniform_unit_square(4).unwrap();
        let d = DofMap::interior(&mesh);
        let k = assemble_stiffness(&mesh, &d).unwrap();
        let m = assemble_mass(&mesh, &d).unwrap();
        let n = Norms::new(&k, &m, &m).unwrap();
        let z = vec![0.0; 2 * d.n_dofs()];
        assert_eq!(n.product(&z).unwrap(), 0.0);
        assert_eq!(n.seminorm(&z).unwrap(), 0.0);
        assert_eq!(n.alpha_norm(&z, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(n.product(&z[1..]).is_err());
    }

    #[test]
    fn poincare_bound_and_alpha_norm_formula() {
        let mesh = TriMesh::build_uniform_unit_square(6).unwrap();
        let d = DofMap::interior(&mesh);
        let k = assemble_stiffness(&mesh, &d).unwrap();
        let m = assemble_mass(&mesh, &d).unwrap();
        let n = Norms::new(&k, &m, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let v: Vec<f64> = (0..2 * d.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(n.seminorm(&v).unwrap() <= C_F * n.product(&v).unwrap());
            let a = n.alpha_norm(&v, 1.0, 1.0, 1.0).unwrap();
            assert_eq!(a, n.product(&v).unwrap() + n.seminorm(&v).unwrap());
        }
    }

    #[test]
    fn errors_vanish_on_p1_functions() {
        let mesh = TriMesh::build_uniform_unit_square(4).unwrap();
        let all = DofMap::all_vertices(&mesh);
        let f = Affine { c: 0.5, a: -1.0, b: 2.0 };
        let x = interpolate(&mesh, &all, |a, b| f.eval(a, b));
        assert!(l2_error(&mesh, &all, &x, &f).unwrap() < 1e-14);
        assert!(h1_semi_error(&mesh, &all, &x, &f).unwrap() < 1e-13);
    }

    #[test]
    fn error_of_zero_is_norm_of_field() {
        let mesh = TriMesh::build_uniform_unit_square(16).unwrap();
        let d = DofMap::interior(&mesh);
        let s = SineMode::new(1.0);
        let zero = vec![0.0; d.n_dofs()];
        // ||s||^2 = 1/4, |s|_1^2 = pi^2 / 2
        assert!((l2_error(&mesh, &d, &zero, &s).unwrap() - 0.5).abs() < 1e-9);
        let h1 = (std::f64::consts::PI.powi(2) / 2.0).sqrt();
        assert!((h1_semi_error(&mesh, &d, &zero, &s).unwrap() - h1).abs() < 1e-8);
    }
}
