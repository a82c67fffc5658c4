//! Ritz projections and the quasi-best constant of the constraint.

use crate::error::{Error, Result};
use crate::fem::{assemble_load, assemble_stiffness, DifferentiableField};
use crate::linalg::{self, cg, generalized_eig_max};
use crate::mesh::{interpolation_matrix, DofMap, TriMesh};
use crate::sparse::CsrMatrix;

/// Load order for the right-hand side of Ritz projections.
pub const RITZ_LOAD_ORDER: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct RitzProjection {
    pub coeffs: Vec<f64>,
    /// `||K R - F|| / ||F||`.
    pub orthogonality_residual: f64,
}

fn solve_k(k: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (x, info) = cg(k, b, 1e-13, 20 * k.n_rows() + 1000)?;
    Ok((x, info.relative_residual))
}

/// Galerkin projection `a(R_h v, phi) = a(v, phi)`, computed from
/// `a(v, phi) = (-Laplace v, phi)` for `v` vanishing on the boundary.
pub fn ritz_projection(mesh: &TriMesh, dofs: &DofMap, exact: &dyn DifferentiableField) -> Result<Vec<f64>> {
    let k = assemble_stiffness(mesh, dofs)?;
    Ok(ritz_projection_with(mesh, dofs, &k, exact)?.coeffs)
}

pub fn ritz_projection_with(
    mesh: &TriMesh,
    dofs: &DofMap,
    k: &CsrMatrix,
    exact: &dyn DifferentiableField,
) -> Result<RitzProjection> {
    let f = assemble_load(mesh, dofs, &|x: f64, y: f64| -exact.laplacian(x, y), RITZ_LOAD_ORDER)?;
    let (coeffs, orthogonality_residual) = solve_k(k, &f)?;
    Ok(RitzProjection {
        coeffs,
        orthogonality_residual,
    })
}

/// Ritz projection onto a coarse space of a discrete function given on a
/// nested fine space: `K_c r = P^T K_f x`.
pub fn ritz_from_fine(
    k_coarse: &CsrMatrix,
    prolongation: &CsrMatrix,
    k_fine: &CsrMatrix,
    x_fine: &[f64],
) -> Result<Vec<f64>> {
    let rhs = prolongation.transpose().matvec(&k_fine.matvec(x_fine));
    if linalg::norm2(&rhs) == 0.0 {
        return Ok(vec![0.0; k_coarse.n_rows()]);
    }
    Ok(solve_k(k_coarse, &rhs)?.0)
}

/// Quasi-best constant `mu_h` of the constraint with the adjoint norm: with
/// `P` the embedding of the coarse space into the reference space,
/// `mu_h^2 = lambda_max(K_c^{-1} P^T K_ref P)`.
pub fn mu_h_compute(coarse: &TriMesh, reference: &TriMesh) -> Result<f64> {
    if !(reference.h() <= coarse.h() / 4.0 * (1.0 + 1e-12)) {
        return Err(Error::InsufficientRefinement {
            h_coarse: coarse.h(),
            h_reference: reference.h(),
        });
    }
    let (cd, rd) = (DofMap::interior(coarse), DofMap::interior(reference));
    let kc = assemble_stiffness(coarse, &cd)?;
    let kr = assemble_stiffness(reference, &rd)?;
    let p = interpolation_matrix(coarse, &cd, reference, &rd)?;
    let a = p.transpose().matmul(&kr.matmul(&p)?)?;
    // round-off asymmetry of the triple product
    let a = a.lin_comb(0.5, &a.transpose(), 0.5)?;
    Ok(generalized_eig_max(&a, &kc, 1e-10, 10_000)?.max(0.0).sqrt())
}
