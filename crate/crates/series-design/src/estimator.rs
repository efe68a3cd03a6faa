//! Best linear unbiased and shrinkage estimation of the basis coefficients
//! from finitely many observations of signal plus Markovian noise.
//!
//! The estimator works on normalized increments of the transformed data
//! `Y/v`: each interval contributes `X_i = Δ(Y/v)_i / √Δq_i`, which have unit
//! variance and are uncorrelated under a triangular kernel. Kernels with
//! noise at the origin (`u(0) ≠ 0`) additionally use the observation at 0 as
//! an extra data row; kernels with a noiseless origin recover one coefficient
//! exactly from `Y₀` through the block structure of the increment moment
//! matrix.

use serde::Serialize;

use crate::basis::{OrthonormalBasis, SeriesFunction};
use crate::design::{build_betas_b, build_c, build_m, dot, DesignGrid};
use crate::kernel::{CaseTag, TriangularKernel, DEFAULT_ZERO_TOL};
use crate::numerics::linalg::{CholeskyFactor, DEFAULT_REL_TOL};
use crate::numerics::{psd_solve_or_ginverse, QuadratureRule, SymMatrix};
use crate::{Error, Result};

/// Observations taken at the points of a sampling design.
#[derive(Debug, Clone)]
pub struct Sample {
    pub design: DesignGrid,
    pub observations: Vec<f64>,
}

impl Sample {
    /// Pair a design with observations, validating lengths and finiteness.
    pub fn new(design: DesignGrid, observations: Vec<f64>) -> Result<Self> {
        if observations.len() != design.n() {
            return Err(Error::Contract(format!(
                "design has {} points but {} observations were given",
                design.n(),
                observations.len()
            )));
        }
        if observations.iter().any(|y| !y.is_finite()) {
            return Err(Error::Contract("observations must be finite".into()));
        }
        Ok(Self { design, observations })
    }
}

/// Output of the full estimation pipeline.
///
/// `theta_shrunk = shrink_factor · theta_blue`. In cases A and B the factor
/// is `c_or_m / (1 + c_or_m) ∈ [0, 1)`; in case C the coefficient scale is
/// known exactly from the noiseless origin observation and the estimator is
/// deliberately left unshrunk (`shrink_factor = 1`).
#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub theta_blue: Vec<f64>,
    pub theta_shrunk: Vec<f64>,
    pub shrink_factor: f64,
    pub case: CaseTag,
    pub c_or_m: f64,
}

enum SolverPath {
    /// `u(0) ≠ 0`: θ̌ = C⁻¹ (M B⁻¹ Σ β_i X_i + Φ(0) Y₀ / (u(0)v(0))).
    OriginNoise {
        chol_c: CholeskyFactor,
        c: SymMatrix,
        chol_b: CholeskyFactor,
        phi0: Vec<f64>,
        u0v0: f64,
    },
    /// `u(0) = 0` with the recognized block structure: the increment moment
    /// matrix is singular exactly in one component whose transformed basis
    /// function is constant; that coefficient is recovered from `Y₀`.
    NoiselessOrigin {
        zero_idx: usize,
        keep: Vec<usize>,
        chol_btilde: CholeskyFactor,
        phi0: Vec<f64>,
    },
    /// `u(0) = 0` but all increments are informative: plain generalized
    /// least squares on the increments.
    IncrementsOnly { chol_b: CholeskyFactor },
    /// Degenerate beyond the recognized pattern: spectral pseudoinverse.
    Spectral { b_pinv: SymMatrix },
}

/// Precomputed estimator for a fixed (kernel, basis, design, quadrature)
/// quadruple; reusable across many observation vectors.
pub struct BlueSolver {
    path: SolverPath,
    m: SymMatrix,
    betas: Vec<Vec<f64>>,
    v_at: Vec<f64>,
    sqrt_dq: Vec<f64>,
    n: usize,
    j: usize,
}

impl BlueSolver {
    /// Build the solver, selecting the estimation path from the kernel's
    /// origin behaviour and the rank structure of the increment matrix.
    pub fn new(
        kernel: &TriangularKernel,
        basis: &OrthonormalBasis,
        design: &DesignGrid,
        quad: &QuadratureRule,
    ) -> Result<Self> {
        let j = basis.j();
        let n = design.n();
        let pts = design.points();
        let m = build_m(kernel, basis, quad)?;
        let (betas, b) = build_betas_b(kernel, basis, design)?;
        let v_at: Vec<f64> = pts.iter().map(|&t| kernel.v(t)).collect();
        let sqrt_dq: Vec<f64> = pts
            .windows(2)
            .map(|w| (kernel.q(w[1]) - kernel.q(w[0])).sqrt())
            .collect();
        let max_diag = (0..j).map(|i| b.get(i, i)).fold(0.0_f64, f64::max);
        let pivot_floor = DEFAULT_REL_TOL * max_diag.max(1e-300);

        let path = if kernel.u(0.0).abs() > DEFAULT_ZERO_TOL {
            let chol_b = b.cholesky(pivot_floor).map_err(|_| {
                Error::Underdetermined(format!(
                    "the increment matrix B is singular for this {n}-point design with J = {j}"
                ))
            })?;
            let c = build_c(kernel, basis, quad)?;
            let chol_c = c.cholesky(0.0).map_err(|_| {
                Error::Underdetermined("the information matrix C is singular".into())
            })?;
            SolverPath::OriginNoise {
                chol_c,
                c,
                chol_b,
                phi0: basis.phi(0.0)?,
                u0v0: kernel.u0v0(),
            }
        } else {
            // Structural zero rows of B.
            let zero_rows: Vec<usize> = (0..j)
                .filter(|&i| (0..j).all(|k| b.get(i, k).abs() <= DEFAULT_REL_TOL * max_diag))
                .collect();
            // Components whose transformed basis function φ/v has an
            // identically zero derivative, detected on a 64-point grid.
            let constant_components = constant_transformed_components(kernel, basis)?;
            let phi0 = basis.phi(0.0)?;

            if zero_rows == constant_components
                && zero_rows.len() == 1
                && phi0[zero_rows[0]].abs() > DEFAULT_ZERO_TOL
            {
                let zero_idx = zero_rows[0];
                let keep: Vec<usize> = (0..j).filter(|&i| i != zero_idx).collect();
                let btilde = SymMatrix::from_fn(keep.len(), |a, c| b.get(keep[a], keep[c]));
                let chol_btilde = btilde.cholesky(pivot_floor).map_err(|_| {
                    Error::Underdetermined(format!(
                        "the reduced increment matrix is singular for this {n}-point design \
                         with J = {j}"
                    ))
                })?;
                SolverPath::NoiselessOrigin { zero_idx, keep, chol_btilde, phi0 }
            } else if zero_rows.is_empty() {
                match b.cholesky(pivot_floor) {
                    Ok(chol_b) => SolverPath::IncrementsOnly { chol_b },
                    Err(_) => {
                        log::warn!(
                            "increment matrix is rank-deficient without a recognizable \
                             block structure; using a spectral pseudoinverse"
                        );
                        let (b_pinv, _) = psd_solve_or_ginverse(&b, DEFAULT_REL_TOL)?;
                        SolverPath::Spectral { b_pinv }
                    }
                }
            } else {
                log::warn!(
                    "increment matrix has zero rows {zero_rows:?} that do not match the \
                     constant transformed components {constant_components:?}; using a \
                     spectral pseudoinverse"
                );
                let (b_pinv, _) = psd_solve_or_ginverse(&b, DEFAULT_REL_TOL)?;
                SolverPath::Spectral { b_pinv }
            }
        };

        Ok(Self { path, m, betas, v_at, sqrt_dq, n, j })
    }

    /// Normalized increments `X_i = Δ(Y/v)_i / √Δq_i`.
    fn increments(&self, obs: &[f64]) -> Vec<f64> {
        (0..self.n - 1)
            .map(|k| (obs[k + 1] / self.v_at[k + 1] - obs[k] / self.v_at[k]) / self.sqrt_dq[k])
            .collect()
    }

    /// Best linear unbiased estimate of the coefficient vector.
    pub fn estimate(&self, observations: &[f64]) -> Result<Vec<f64>> {
        if observations.len() != self.n {
            return Err(Error::Contract(format!(
                "expected {} observations, got {}",
                self.n,
                observations.len()
            )));
        }
        if observations.iter().any(|y| !y.is_finite()) {
            return Err(Error::Contract("observations must be finite".into()));
        }
        let x = self.increments(observations);
        let mut rhs = vec![0.0; self.j];
        for (beta, xk) in self.betas.iter().zip(&x) {
            for (r, b) in rhs.iter_mut().zip(beta) {
                *r += b * xk;
            }
        }
        Ok(match &self.path {
            SolverPath::OriginNoise { chol_c, chol_b, phi0, u0v0, .. } => {
                let z = chol_b.solve(&rhs);
                let w = self.m.mul_vec(&z);
                let r: Vec<f64> = w
                    .iter()
                    .zip(phi0)
                    .map(|(wi, p)| wi + p * observations[0] / u0v0)
                    .collect();
                chol_c.solve(&r)
            }
            SolverPath::NoiselessOrigin { zero_idx, keep, chol_btilde, phi0 } => {
                let rhs_keep: Vec<f64> = keep.iter().map(|&i| rhs[i]).collect();
                let theta_keep = chol_btilde.solve(&rhs_keep);
                let mut theta = vec![0.0; self.j];
                for (slot, &i) in keep.iter().enumerate() {
                    theta[i] = theta_keep[slot];
                }
                let pinned: f64 = keep
                    .iter()
                    .enumerate()
                    .map(|(slot, &i)| phi0[i] * theta_keep[slot])
                    .sum();
                theta[*zero_idx] = (observations[0] - pinned) / phi0[*zero_idx];
                theta
            }
            SolverPath::IncrementsOnly { chol_b } => chol_b.solve(&rhs),
            SolverPath::Spectral { b_pinv } => b_pinv.mul_vec(&rhs),
        })
    }

    /// Exact covariance matrix of the unbiased estimate under the model.
    pub fn covariance(&self) -> SymMatrix {
        match &self.path {
            SolverPath::OriginNoise { chol_c, chol_b, phi0, u0v0, .. } => {
                let b_inv = chol_b.inverse();
                let mut inner = b_inv.congruence(&self.m.to_rows());
                let beta1: Vec<f64> = phi0.iter().map(|p| p / u0v0.sqrt()).collect();
                inner.add_outer(&beta1, 1.0);
                let c_inv = chol_c.inverse();
                inner.congruence(&c_inv.to_rows())
            }
            SolverPath::NoiselessOrigin { zero_idx, keep, chol_btilde, phi0 } => {
                let btilde_inv = chol_btilde.inverse();
                let mut a_rows = vec![vec![0.0; keep.len()]; self.j];
                for (slot, &i) in keep.iter().enumerate() {
                    a_rows[i][slot] = 1.0;
                    a_rows[*zero_idx][slot] = -phi0[i] / phi0[*zero_idx];
                }
                btilde_inv.congruence(&a_rows)
            }
            SolverPath::IncrementsOnly { chol_b } => chol_b.inverse(),
            SolverPath::Spectral { b_pinv } => b_pinv.clone(),
        }
    }

    /// Shrink an unbiased estimate toward zero using the estimated
    /// signal-to-risk ratio; `y0` (the observation at `t = 0`) decides
    /// between cases B and C for noiseless-origin kernels.
    pub fn shrink(&self, theta_blue: &[f64], y0: f64) -> Result<EstimateResult> {
        if theta_blue.len() != self.j {
            return Err(Error::Contract(format!(
                "coefficient vector has length {}, expected {}",
                theta_blue.len(),
                self.j
            )));
        }
        let (case, c_or_m) = match &self.path {
            SolverPath::OriginNoise { c, .. } => {
                (CaseTag::A, dot(theta_blue, &c.mul_vec(theta_blue)).max(0.0))
            }
            _ => {
                let m_val = dot(theta_blue, &self.m.mul_vec(theta_blue)).max(0.0);
                let case =
                    if y0.abs() <= DEFAULT_ZERO_TOL { CaseTag::B } else { CaseTag::C };
                (case, m_val)
            }
        };
        let shrink_factor = match case {
            CaseTag::C => 1.0,
            _ => c_or_m / (1.0 + c_or_m),
        };
        let theta_shrunk = theta_blue.iter().map(|t| t * shrink_factor).collect();
        Ok(EstimateResult {
            theta_blue: theta_blue.to_vec(),
            theta_shrunk,
            shrink_factor,
            case,
            c_or_m,
        })
    }
}

/// Indices of basis components whose transformed function `φ_j / v` is
/// constant (zero derivative on a 64-point grid) — exactly the components
/// the increments cannot see.
fn constant_transformed_components(
    kernel: &TriangularKernel,
    basis: &OrthonormalBasis,
) -> Result<Vec<usize>> {
    const GRID: usize = 64;
    let j = basis.j();
    let mut max_per_component = vec![0.0_f64; j];
    for g in 0..GRID {
        let t = g as f64 / (GRID - 1) as f64;
        let d = crate::design::d_phi_over_v(kernel, basis, t)?;
        for (m, di) in max_per_component.iter_mut().zip(&d) {
            *m = m.max(di.abs());
        }
    }
    let scale = max_per_component.iter().fold(0.0_f64, |a, &b| a.max(b)).max(1.0);
    Ok((0..j).filter(|&i| max_per_component[i] <= 1e-8 * scale).collect())
}

/// Best linear unbiased estimate of the coefficients from one sample.
pub fn blue_estimate(
    sample: &Sample,
    kernel: &TriangularKernel,
    basis: &OrthonormalBasis,
    quad: &QuadratureRule,
) -> Result<Vec<f64>> {
    BlueSolver::new(kernel, basis, &sample.design, quad)?.estimate(&sample.observations)
}

/// Exact covariance of the unbiased estimate for a design (no data needed).
pub fn blue_covariance(
    kernel: &TriangularKernel,
    basis: &OrthonormalBasis,
    design: &DesignGrid,
    quad: &QuadratureRule,
) -> Result<SymMatrix> {
    Ok(BlueSolver::new(kernel, basis, design, quad)?.covariance())
}

/// Shrinkage estimate from a precomputed unbiased estimate.
///
/// `y0` is the observation at `t = 0`; it is only consulted for
/// noiseless-origin kernels, where it separates case B (no signal at the
/// origin, shrink by `m̌/(1+m̌)`) from case C (exact scale information, no
/// shrinkage).
pub fn shrink_estimate(
    theta_blue: &[f64],
    y0: f64,
    kernel: &TriangularKernel,
    basis: &OrthonormalBasis,
    design: &DesignGrid,
    quad: &QuadratureRule,
) -> Result<EstimateResult> {
    BlueSolver::new(kernel, basis, design, quad)?.shrink(theta_blue, y0)
}

/// Full pipeline: unbiased estimate, then shrinkage.
pub fn estimate(
    sample: &Sample,
    kernel: &TriangularKernel,
    basis: &OrthonormalBasis,
    quad: &QuadratureRule,
) -> Result<EstimateResult> {
    let solver = BlueSolver::new(kernel, basis, &sample.design, quad)?;
    let theta = solver.estimate(&sample.observations)?;
    solver.shrink(&theta, sample.observations[0])
}

/// Riemann-sum plug-in estimate `θ̂_j = Σ_i Δt_i φ_j(t_{i-1}) Y_{i-1}`,
/// the naive benchmark that ignores the error correlation.
pub fn riemann_estimate(sample: &Sample, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    let pts = sample.design.points();
    let j = basis.j();
    let mut theta = vec![0.0; j];
    for k in 0..pts.len() - 1 {
        let dt = pts[k + 1] - pts[k];
        let phi = basis.phi(pts[k])?;
        for (th, p) in theta.iter_mut().zip(&phi) {
            *th += dt * p * sample.observations[k];
        }
    }
    Ok(theta)
}

/// Materialize the shrunk and unbiased estimates as functions
/// `(f̂, f̌) = (Σ θ̂ φ, Σ θ̌ φ)`.
pub fn estimate_functions(
    result: &EstimateResult,
    basis: &OrthonormalBasis,
) -> Result<(SeriesFunction, SeriesFunction)> {
    Ok((
        basis.reconstruct(&result.theta_shrunk)?,
        basis.reconstruct(&result.theta_blue)?,
    ))
}
