//! Finite element discretization and quasi-best-approximation analysis of
//! the reduced optimality system of a linear-quadratic optimal control
//! problem for the Poisson equation.

pub mod analysis;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod optsys;
pub mod quadrature;
pub mod sparse;

pub use analysis::{ConstantsBundle, ErrorReport, ManufacturedCase};
pub use error::{Error, Result};
pub use fem::{DifferentiableField, ScalarField};
pub use linalg::BlockSystem;
pub use mesh::{DofMap, TriMesh};
pub use optsys::{
    BoxBounds, ConstrainedMethod, ControlRepr, ControlVariant, DiscreteSolution, Discretization,
    ModelProblem, SolverOptions,
};
pub use sparse::CsrMatrix;
