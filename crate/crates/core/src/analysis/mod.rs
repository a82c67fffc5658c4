//! Norms, constants, manufactured solutions and the quasi-best-approximation
//! measurements built on top of the discrete solvers.

pub mod constants;
pub mod manufactured;
pub mod metrics;
pub mod monotonicity;
pub mod norms;
pub mod rates;
pub mod report;
pub mod ritz;
pub mod sharpness;
pub mod study;

pub use constants::{limit_checks, ConstantsBundle, ConstantsOverrides, LimitCheck};
pub use manufactured::{manufactured_eigen_case, manufactured_eigen_case_scaled, ManufacturedCase};
pub use metrics::ConstrainedMetrics;
pub use monotonicity::{verify_bk_monotonicity, MonotonicityReport};
pub use norms::Norms;
pub use rates::fit_rate;
pub use report::{measure_nu, ErrorReport};
pub use ritz::{mu_h_compute, ritz_projection};
pub use sharpness::{sharpness_inf_sup, SharpnessRow};
