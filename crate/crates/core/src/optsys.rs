//! Discrete rescaled and reduced optimality systems.
//!
//! Unknowns are the state `u` and the rescaled adjoint `z = p / sqrt(alpha)`.
//! With `s = 1/sqrt(alpha)` the unconstrained system reads
//!
//! ```text
//! [ -s M   K     ] [u]   [ -s F ]
//! [  K     s M_c ] [z] = [  0   ]
//! ```
//!
//! where `F` is the load of the desired state and `M_c` is the mass matrix
//! (exact control action) or the P0 Gram matrix (piecewise constant control).
//! The control is recovered as `q = -s z`, or its element means.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_clamped_term, assemble_inactive_mass, assemble_load, assemble_mass, assemble_stiffness,
    check_box, element_means, p0_gram, ScalarField,
};
use crate::linalg::{self, cg, minres, solve_sym_indefinite, BlockSystem, DENSE_MAX};
use crate::mesh::{DofMap, TriMesh};
use crate::sparse::CsrMatrix;

/// Poincare-Friedrichs constant of the unit square, `1/(sqrt(2) pi)`.
pub const C_F: f64 = 0.225_079_079_039_276_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlVariant {
    Full,
    PiecewiseConstant,
}

impl fmt::Display for ControlVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlVariant::Full => "full",
            ControlVariant::PiecewiseConstant => "p0",
        })
    }
}

/// Uniform control box `[lo, hi]`; either side may be infinite (or given by
/// the `+-1e308` sentinel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub lo: f64,
    pub hi: f64,
}

impl BoxBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        check_box(lo, hi)?;
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: -1e308,
            hi: 1e308,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo <= -1e308 && self.hi >= 1e308
    }

    pub fn project(&self, x: f64) -> f64 {
        crate::fem::project_box(x, self.lo, self.hi)
    }
}

#[derive(Clone)]
pub struct ModelProblem {
    pub alpha: f64,
    pub u_d: Arc<dyn ScalarField>,
    pub variant: ControlVariant,
    pub bounds: Option<BoxBounds>,
}

impl fmt::Debug for ModelProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelProblem")
            .field("alpha", &self.alpha)
            .field("variant", &self.variant)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl ModelProblem {
    pub fn new(alpha: f64, u_d: Arc<dyn ScalarField>) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            alpha,
            u_d,
            variant: ControlVariant::Full,
            bounds: None,
        })
    }

    pub fn with_variant(mut self, variant: ControlVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.bounds = Some(BoxBounds::new(lo, hi)?);
        Ok(self)
    }

    /// `1 / sqrt(alpha)`.
    pub fn scale(&self) -> f64 {
        1.0 / self.alpha.sqrt()
    }
}

/// Representation of the recovered control.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlRepr {
    /// P1 coefficients of `-z/sqrt(alpha)`.
    Nodal(Vec<f64>),
    /// Pointwise clamp of the P1 function with coefficients `raw`.
    Clamped { raw: Vec<f64>, bounds: BoxBounds },
    /// Element means of `-z/sqrt(alpha)`, one per triangle.
    ElementMeans(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub q: ControlRepr,
    pub solver_residual: f64,
    pub iterations: usize,
    /// Residual after each outer iteration of a nonlinear solve.
    pub history: Vec<f64>,
}

impl DiscreteSolution {
    /// `(u, z)` stacked.
    pub fn stacked(&self) -> Vec<f64> {
        self.u.iter().chain(&self.z).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    Minres,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub linear_solver: LinearSolver,
    pub load_order: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            linear_solver: LinearSolver::Minres,
            load_order: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstrainedMethod {
    FixedPoint,
    SemismoothNewton,
}

/// Matrices shared by every solve on one mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: TriMesh,
    pub dofs: DofMap,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub g: CsrMatrix,
}

impl Discretization {
    pub fn new(mesh: TriMesh) -> Result<Self> {
        let dofs = DofMap::interior(&mesh);
        dofs.require_nonempty()?;
        let k = assemble_stiffness(&mesh, &dofs)?;
        let m = assemble_mass(&mesh, &dofs)?;
        let g = p0_gram(&mesh, &dofs)?;
        Ok(Self { mesh, dofs, k, m, g })
    }

    pub fn at_level(level: usize) -> Result<Self> {
        Self::new(TriMesh::unit_square_level(level))
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Control Gram matrix of the variant.
    pub fn control_gram(&self, variant: ControlVariant) -> &CsrMatrix {
        match variant {
            ControlVariant::Full => &self.m,
            ControlVariant::PiecewiseConstant => &self.g,
        }
    }

    pub fn load(&self, f: &dyn ScalarField, order: usize) -> Result<Vec<f64>> {
        assemble_load(&self.mesh, &self.dofs, f, order)
    }
}

fn check_dofs(mesh: &TriMesh, dofs: &DofMap) -> Result<()> {
    if dofs.n_vertices() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch("dof map does not belong to the mesh".into()));
    }
    dofs.require_nonempty()
}

fn discretize(mesh: &TriMesh, dofs: &DofMap) -> Result<Discretization> {
    check_dofs(mesh, dofs)?;
    Ok(Discretization {
        mesh: mesh.clone(),
        dofs: dofs.clone(),
        k: assemble_stiffness(mesh, dofs)?,
        m: assemble_mass(mesh, dofs)?,
        g: p0_gram(mesh, dofs)?,
    })
}

/// Block system of the unconstrained problem. The box, if any, is ignored.
pub fn assemble_reduced_system(mesh: &TriMesh, dofs: &DofMap, prob: &ModelProblem) -> Result<BlockSystem> {
    reduced_system(&discretize(mesh, dofs)?, prob, SolverOptions::default().load_order)
}

pub fn reduced_system(disc: &Discretization, prob: &ModelProblem, load_order: usize) -> Result<BlockSystem> {
    let s = prob.scale();
    let f = disc.load(prob.u_d.as_ref(), load_order)?;
    let n = disc.n_dofs();
    let mut rhs = vec![0.0; 2 * n];
    for (r, fi) in rhs.iter_mut().zip(&f) {
        *r = -s * fi;
    }
    BlockSystem::new(
        disc.m.scaled(-s),
        disc.k.clone(),
        disc.k.clone(),
        disc.control_gram(prob.variant).scaled(s),
        rhs,
    )
}

fn recover_control(disc: &Discretization, prob: &ModelProblem, z: &[f64]) -> Result<ControlRepr> {
    let s = prob.scale();
    let raw: Vec<f64> = z.iter().map(|v| -s * v).collect();
    Ok(match prob.variant {
        ControlVariant::Full => ControlRepr::Nodal(raw),
        ControlVariant::PiecewiseConstant => {
            ControlRepr::ElementMeans(element_means(&disc.mesh, &disc.dofs, &raw)?)
        }
    })
}

fn solve_linear(sys: &BlockSystem, opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    match opts.linear_solver {
        LinearSolver::Minres => {
            let (x, info) = solve_sym_indefinite(sys, opts.tol, opts.max_iter)?;
            Ok((x, info.iterations))
        }
        LinearSolver::Dense => {
            let dev = sys.symmetry_deviation();
            if dev > linalg::block::SYMMETRY_TOL {
                return Err(Error::NotSymmetric(dev));
            }
            Ok((sys.solve_dense()?, 0))
        }
    }
}

/// Solves the unconstrained system on `mesh`.
pub fn solve_unconstrained(
    mesh: &TriMesh,
    dofs: &DofMap,
    prob: &ModelProblem,
    opts: &SolverOptions,
) -> Result<DiscreteSolution> {
    solve_unconstrained_on(&discretize(mesh, dofs)?, prob, opts)
}

pub fn solve_unconstrained_on(
    disc: &Discretization,
    prob: &ModelProblem,
    opts: &SolverOptions,
) -> Result<DiscreteSolution> {
    if prob.bounds.is_some() {
        return Err(Error::InvalidParameter(
            "problem has control bounds; use solve_box_constrained".into(),
        ));
    }
    let sys = reduced_system(disc, prob, opts.load_order)?;
    let (x, iterations) = solve_linear(&sys, opts)?;
    let n = disc.n_dofs();
    let (u, z) = (x[..n].to_vec(), x[n..].to_vec());
    Ok(DiscreteSolution {
        q: recover_control(disc, prob, &z)?,
        solver_residual: sys.relative_residual(&x),
        u,
        z,
        iterations,
        history: Vec::new(),
    })
}

/// Residual blocks of the constrained system at `(u, z)`:
/// `K z - s M u + s F` and `K u - N(z)`.
pub fn constrained_residual(
    disc: &Discretization,
    prob: &ModelProblem,
    f: &[f64],
    u: &[f64],
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bounds = prob.bounds.unwrap_or_else(BoxBounds::unbounded);
    let s = prob.scale();
    let mut r1 = disc.k.matvec(z);
    let mu = disc.m.matvec(u);
    for i in 0..r1.len() {
        r1[i] += s * (f[i] - mu[i]);
    }
    let nz = assemble_clamped_term(&disc.mesh, &disc.dofs, z, prob.alpha, bounds.lo, bounds.hi)?;
    let r2 = linalg::sub(&disc.k.matvec(u), &nz);
    Ok((r1, r2))
}

fn combined_norm(r1: &[f64], r2: &[f64]) -> f64 {
    (linalg::dot(r1, r1) + linalg::dot(r2, r2)).sqrt()
}

fn inner_tol(tol: f64, b: &[f64]) -> f64 {
    let bn = linalg::norm2(b);
    if bn == 0.0 {
        return 1e-10;
    }
    (1e-2 * tol / bn).clamp(1e-12, 1e-10)
}

fn spd_solve(k: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    if linalg::norm2(b) == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let (x, _) = cg(k, b, inner_tol(tol, b), 20 * k.n_rows() + 1000)?;
    Ok(x)
}

/// One application of the fixed-point map: `u = K^{-1} N(z)`, then
/// `z' = K^{-1} s (M u - F)`. Returns `(u, z')`.
pub fn fixed_point_map(
    disc: &Discretization,
    prob: &ModelProblem,
    f: &[f64],
    z: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bounds = prob.bounds.unwrap_or_else(BoxBounds::unbounded);
    let s = prob.scale();
    let nz = assemble_clamped_term(&disc.mesh, &disc.dofs, z, prob.alpha, bounds.lo, bounds.hi)?;
    let u = spd_solve(&disc.k, &nz, tol)?;
    let mu = disc.m.matvec(&u);
    let rhs: Vec<f64> = mu.iter().zip(f).map(|(m, fi)| s * (m - fi)).collect();
    let z_new = spd_solve(&disc.k, &rhs, tol)?;
    Ok((u, z_new))
}

/// Solves the box constrained system; the residual is the Euclidean norm of
/// both residual blocks.
pub fn solve_box_constrained(
    mesh: &TriMesh,
    dofs: &DofMap,
    prob: &ModelProblem,
    method: ConstrainedMethod,
    tol: f64,
    max_iter: usize,
) -> Result<DiscreteSolution> {
    let opts = SolverOptions {
        tol,
        max_iter,
        ..SolverOptions::default()
    };
    solve_box_constrained_on(&discretize(mesh, dofs)?, prob, method, &opts)
}

pub fn solve_box_constrained_on(
    disc: &Discretization,
    prob: &ModelProblem,
    method: ConstrainedMethod,
    opts: &SolverOptions,
) -> Result<DiscreteSolution> {
    let bounds = prob
        .bounds
        .ok_or_else(|| Error::InvalidParameter("constrained solve needs control bounds".into()))?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if prob.variant != ControlVariant::Full {
        return Err(Error::UnsupportedVariant(
            "box constraints are implemented for the exact control action only",
        ));
    }
    let f = disc.load(prob.u_d.as_ref(), opts.load_order)?;
    let (u, z, iterations, history) = match method {
        ConstrainedMethod::FixedPoint => fixed_point(disc, prob, &f, opts)?,
        ConstrainedMethod::SemismoothNewton => semismooth_newton(disc, prob, &f, opts)?,
    };
    let (r1, r2) = constrained_residual(disc, prob, &f, &u, &z)?;
    let s = prob.scale();
    let raw: Vec<f64> = z.iter().map(|v| -s * v).collect();
    Ok(DiscreteSolution {
        u,
        z,
        q: ControlRepr::Clamped { raw, bounds },
        solver_residual: combined_norm(&r1, &r2),
        iterations,
        history,
    })
}

type Iterate = (Vec<f64>, Vec<f64>, usize, Vec<f64>);

fn fixed_point(disc: &Discretization, prob: &ModelProblem, f: &[f64], opts: &SolverOptions) -> Result<Iterate> {
    let n = disc.n_dofs();
    // the map contracts in the energy norm, so damping is driven by the
    // energy norm of the increment; convergence by the full residual
    let increment = |z: &[f64], s_z: &[f64]| disc.k.quad(&linalg::sub(s_z, z)).max(0.0).sqrt();
    let mut z = vec![0.0; n];
    let mut omega: f64 = 1.0;
    let mut history = Vec::new();
    let (mut u, mut s_z) = fixed_point_map(disc, prob, f, &z, opts.tol)?;
    let mut res = constrained_norm(disc, prob, f, &u, &z)?;
    let mut inc = increment(&z, &s_z);
    history.push(res);
    for k in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok((u, z, k, history));
        }
        loop {
            let z_try: Vec<f64> = z.iter().zip(&s_z).map(|(a, b)| a + omega * (b - a)).collect();
            let (u_try, s_try) = fixed_point_map(disc, prob, f, &z_try, opts.tol)?;
            let res_try = constrained_norm(disc, prob, f, &u_try, &z_try)?;
            let inc_try = increment(&z_try, &s_try);
            if inc_try <= inc || res_try <= opts.tol {
                z = z_try;
                u = u_try;
                s_z = s_try;
                res = res_try;
                inc = inc_try;
                history.push(res);
                omega = (2.0 * omega).min(1.0);
                break;
            }
            omega *= 0.5;
            if omega < 1.0 / 16.0 {
                return Err(Error::NotConverged {
                    iterations: k + 1,
                    residual: res,
                    history,
                });
            }
        }
    }
    if res <= opts.tol {
        return Ok((u, z, opts.max_iter, history));
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: res,
        history,
    })
}

fn constrained_norm(disc: &Discretization, prob: &ModelProblem, f: &[f64], u: &[f64], z: &[f64]) -> Result<f64> {
    let (r1, r2) = constrained_residual(disc, prob, f, u, z)?;
    Ok(combined_norm(&r1, &r2))
}

fn semismooth_newton(
    disc: &Discretization,
    prob: &ModelProblem,
    f: &[f64],
    opts: &SolverOptions,
) -> Result<Iterate> {
    let bounds = prob.bounds.unwrap_or_else(BoxBounds::unbounded);
    let n = disc.n_dofs();
    let s = prob.scale();
    let (mut u, mut z) = (vec![0.0; n], vec![0.0; n]);
    let mut history = Vec::new();
    let (mut r1, mut r2) = constrained_residual(disc, prob, f, &u, &z)?;
    let mut res = combined_norm(&r1, &r2);
    history.push(res);
    for k in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok((u, z, k, history));
        }
        let inactive = assemble_inactive_mass(&disc.mesh, &disc.dofs, &z, prob.alpha, bounds.lo, bounds.hi)?;
        // residual ordering: row 1 is the z-equation, row 2 the u-equation;
        // the Jacobian in (u, z) is [[-s M, K], [K, s M_inactive]]
        let rhs: Vec<f64> = r1.iter().chain(&r2).map(|v| -v).collect();
        let jac = BlockSystem::new(disc.m.scaled(-s), disc.k.clone(), disc.k.clone(), inactive.scaled(s), rhs)?;
        let step = if 2 * n <= DENSE_MAX && opts.linear_solver == LinearSolver::Dense {
            jac.solve_dense()?
        } else {
            let rel = (1e-2 * opts.tol / res).clamp(1e-13, 1e-8);
            minres(&jac, &jac.rhs, rel, 100_000)?.0
        };
        let mut t = 1.0;
        loop {
            let u_try: Vec<f64> = u.iter().zip(&step[..n]).map(|(a, d)| a + t * d).collect();
            let z_try: Vec<f64> = z.iter().zip(&step[n..]).map(|(a, d)| a + t * d).collect();
            let (a, b) = constrained_residual(disc, prob, f, &u_try, &z_try)?;
            let res_try = combined_norm(&a, &b);
            if res_try < res || res_try <= opts.tol {
                u = u_try;
                z = z_try;
                r1 = a;
                r2 = b;
                res = res_try;
                history.push(res);
                break;
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(Error::NotConverged {
                    iterations: k + 1,
                    residual: res,
                    history,
                });
            }
        }
    }
    if res <= opts.tol {
        return Ok((u, z, opts.max_iter, history));
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: res,
        history,
    })
}

/// Dual norm of `(G - M) z` with respect to the Hilbert realization
/// `phi^T (K + (C_F^2/alpha) M) phi` of the second-component test norm.
pub fn consistency_gap(mesh: &TriMesh, dofs: &DofMap, prob: &ModelProblem, z: &[f64]) -> Result<f64> {
    consistency_gap_on(&discretize(mesh, dofs)?, prob, z)
}

pub fn consistency_gap_on(disc: &Discretization, prob: &ModelProblem, z: &[f64]) -> Result<f64> {
    if prob.variant == ControlVariant::Full {
        return Err(Error::UnsupportedVariant(
            "the consistency gap vanishes identically for the exact control action",
        ));
    }
    if z.len() != disc.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "z has {} entries, expected {}",
            z.len(),
            disc.n_dofs()
        )));
    }
    let r = linalg::sub(&disc.g.matvec(z), &disc.m.matvec(z));
    if linalg::norm2(&r) == 0.0 {
        return Ok(0.0);
    }
    let h2 = disc.k.lin_comb(1.0, &disc.m, C_F * C_F / prob.alpha)?;
    let (y, _) = cg(&h2, &r, 1e-12, 20 * disc.n_dofs() + 1000)?;
    Ok(linalg::dot(&r, &y).max(0.0).sqrt())
}
