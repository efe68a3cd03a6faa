//! Numerical primitives: composite Gauss–Legendre quadrature, a small dense
//! symmetric-matrix toolkit with PSD-aware (pseudo)inversion, and a seeded,
//! bitwise-reproducible particle-swarm minimizer.

pub mod linalg;
pub mod pso;
pub mod quad;

pub use linalg::{psd_solve_or_ginverse, SymMatrix};
pub use pso::{pso_minimize, PsoConfig};
pub use quad::QuadratureRule;
