//! Skew-orthogonal polynomials for β = 1 and β = 4 ensembles: construction in
//! double-double precision, the operator algebra (Q, P, R), finite windows,
//! folding, kernels and Monte Carlo cross-checks.

pub mod conventions;
pub mod dd;
pub mod error;
pub mod fundamental;
pub mod kernels;
pub mod mc;
pub mod moments;
pub mod operators;
pub mod qlinalg;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod sop;
pub mod window;

pub use conventions::{Beta, System, Wave};
pub use dd::Dd;
pub use error::{Error, Result};
pub use moments::Potential;
pub use sop::{build_family, SopFamily};
