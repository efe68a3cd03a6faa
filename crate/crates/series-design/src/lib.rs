//! Optimal sampling designs and shrinkage series estimators for nonparametric
//! regression observed under Markovian (triangular-kernel) correlated noise.
//!
//! The library covers the full pipeline:
//!
//! * [`kernel`] — triangular covariance kernels `K(s,t) = u(min) v(max)` with
//!   the built-in exponential and Brownian-motion families;
//! * [`basis`] — orthonormal trigonometric bases and regression-function models;
//! * [`oracle`] — closed-form optimal signed measures, oracle risk, and
//!   optimality verification for the continuous-observation problem;
//! * [`design`] — moment matrices, optimal weights, the sampling-design
//!   criterion, and a particle-swarm design optimizer;
//! * [`estimator`] — best linear unbiased and shrinkage series estimators from
//!   finitely many observations;
//! * [`simulator`] — exact Gaussian-process sampling and Monte-Carlo MISE
//!   studies with reproducible per-replicate random streams;
//! * [`numerics`] — the quadrature, symmetric-matrix, and particle-swarm
//!   primitives the rest of the crate is built on;
//! * [`config`] — serde-backed run configuration shared with the CLI.
//!
//! Heavy loops (Monte-Carlo replicates, swarm evaluation) run through
//! [`exec::map_indexed`], which uses a rayon thread pool when the crate is
//! built with the default `parallel` feature and a plain sequential loop
//! otherwise. Results are bitwise identical in both modes.

pub mod basis;
pub mod config;
pub mod design;
pub mod estimator;
pub mod exec;
pub mod kernel;
pub mod numerics;
pub mod oracle;
pub mod reference;
pub mod simulator;

use thiserror::Error;

/// Unified error type for the whole pipeline.
///
/// [`Error::Config`] signals an invalid run configuration (CLI exit code 2);
/// every other variant is a numerical or contract failure (CLI exit code 3).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A point fell outside the unit interval where kernels and bases live.
    #[error("domain error: {what} = {value} outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    /// The kernel failed a structural requirement (positivity, monotone `q`, ...).
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// An integrand returned a non-finite value at a quadrature node.
    #[error("non-integrable sample: integrand not finite at node t = {node}")]
    NonIntegrable { node: f64 },

    /// A matrix required to be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not PSD: {0}")]
    NotPsd(String),

    /// Two consecutive design points collapsed under the `q` transform.
    #[error("zero increment: q(t_{i}) - q(t_{i_prev}) = {dq:.3e} at interval {i} (t = {t0}..{t1})")]
    ZeroIncrement { i: usize, i_prev: usize, t0: f64, t1: f64, dq: f64 },

    /// The design has too few points to identify all coefficients.
    #[error("design underdetermines θ: increase n ({0})")]
    Underdetermined(String),

    /// The oracle formulas need two derivatives of the regression function.
    #[error("oracle requires C² model: {0}")]
    OracleSmoothness(String),

    /// Invalid run configuration (bad schema, missing field, bad value).
    #[error("config error: {0}")]
    Config(String),

    /// An estimator or simulation failed irrecoverably mid-run.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code mandated for this error class: 2 for configuration
    /// problems, 3 for numerical/contract failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
