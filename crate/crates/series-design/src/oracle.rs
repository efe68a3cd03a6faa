//! Closed-form solutions of the continuous-observation problem: the optimal
//! signed observation measure, the oracle risk it attains, and a numerical
//! check of its optimality condition.
//!
//! For a triangular kernel and a twice-differentiable regression function
//! the optimal measure has two atoms (at the endpoints) and an absolutely
//! continuous part; all three ingredients are explicit in `u`, `v`, `q` and
//! the derivatives of `f`. Which ingredients survive depends on the case
//! classification (see [`CaseTag`]).

use std::sync::Arc;

use serde::Serialize;

use crate::basis::FunctionModel;
use crate::kernel::{CaseTag, TriangularKernel, DEFAULT_ZERO_TOL};
use crate::numerics::QuadratureRule;
use crate::{Error, Result};

/// The optimal signed measure `ξ*(ds) = scale · (P₀ δ₀ + P₁ δ₁ + p(s) ds)`
/// with `scale = θ_j / (1 + c)`.
#[derive(Clone)]
pub struct OracleMeasure {
    /// Case classification the measure was derived under.
    pub case: CaseTag,
    /// Curvature constant `c ≥ 0` entering the scale and the oracle risk.
    pub c: f64,
    /// Atom weight at `t = 0` (before scaling).
    pub p0: f64,
    /// Atom weight at `t = 1` (before scaling).
    pub p1: f64,
    /// Target coefficient the measure recovers.
    pub theta_j: f64,
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for OracleMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleMeasure")
            .field("case", &self.case)
            .field("c", &self.c)
            .field("p0", &self.p0)
            .field("p1", &self.p1)
            .field("theta_j", &self.theta_j)
            .finish()
    }
}

impl OracleMeasure {
    /// Lebesgue density `p(t)` of the absolutely continuous part (before
    /// scaling).
    pub fn density(&self, t: f64) -> f64 {
        (self.density)(t)
    }

    /// Common scale `θ_j / (1 + c)` multiplying atoms and density.
    pub fn scale(&self) -> f64 {
        self.theta_j / (1.0 + self.c)
    }

    /// Integral `∫ g dξ*` of a bounded function against the full signed
    /// measure (atoms, density, and scale included).
    pub fn integrate_against(
        &self,
        g: impl Fn(f64) -> f64,
        quad: &QuadratureRule,
    ) -> Result<f64> {
        let ac = quad.integrate(0.0, 1.0, |t| g(t) * self.density(t))?;
        Ok(self.scale() * (self.p0 * g(0.0) + self.p1 * g(1.0) + ac))
    }
}

/// Oracle summary for reports: the measure's scalar ingredients plus the
/// risk it attains.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub case: String,
    pub c: f64,
    pub p0: f64,
    pub p1: f64,
    pub theta_j: f64,
    pub mise: f64,
    pub density_grid: Vec<(f64, f64)>,
    pub optimality_residual: f64,
}

/// Derivative of `f / v`.
fn d_f_over_v(kernel: &TriangularKernel, f: &FunctionModel, t: f64) -> f64 {
    let (v, dv) = (kernel.v(t), kernel.dv(t));
    (f.df(t) * v - f.f(t) * dv) / (v * v)
}

/// Second derivative of `f / v`.
fn dd_f_over_v(kernel: &TriangularKernel, f: &FunctionModel, t: f64) -> f64 {
    let (v, dv, ddv) = (kernel.v(t), kernel.dv(t), kernel.ddv(t));
    (f.ddf(t) * v - f.f(t) * ddv) / (v * v)
        - 2.0 * dv * (f.df(t) * v - f.f(t) * dv) / (v * v * v)
}

/// Derivative of `f / u` (used only where `u > 0`).
fn d_f_over_u(kernel: &TriangularKernel, f: &FunctionModel, t: f64) -> f64 {
    let u = kernel.u(t);
    (f.df(t) * u - f.f(t) * kernel.du(t)) / (u * u)
}

/// Construct the optimal signed measure recovering the coefficient
/// `θ_j = ∫ f φ_j` from continuous observation of `f` plus kernel noise.
///
/// Requires a `C²` model (`f.smooth`); the measure's ingredients involve
/// `f''`. A kernel with `u(0) = 0` and `|f(0)|` below the zero tolerance is
/// treated as case B.
pub fn oracle_measure(
    kernel: &TriangularKernel,
    f: &FunctionModel,
    theta_j: f64,
    quad: &QuadratureRule,
) -> Result<OracleMeasure> {
    if !f.smooth {
        return Err(Error::OracleSmoothness(format!(
            "model \"{}\" lacks bounded first and second derivatives",
            f.name
        )));
    }
    if !theta_j.is_finite() {
        return Err(Error::Contract(format!("theta_j must be finite, got {theta_j}")));
    }
    let case = kernel.case_tag(f.f(0.0), DEFAULT_ZERO_TOL);

    if case == CaseTag::C {
        // The noiseless origin observation recovers θ_j exactly through f(0).
        let p0 = 1.0 / f.f(0.0);
        return Ok(OracleMeasure {
            case,
            c: 0.0,
            p0,
            p1: 0.0,
            theta_j,
            density: Arc::new(|_| 0.0),
        });
    }

    // Shared curvature integral ∫ (d/dt [f/v])² / q' dt.
    let kq = kernel.clone();
    let fq = f.clone();
    let curvature = quad.integrate(0.0, 1.0, move |t| {
        let dq = kq.dq(t);
        if dq <= 0.0 {
            return f64::NAN; // surfaces as a non-integrable-sample error
        }
        let d = d_f_over_v(&kq, &fq, t);
        d * d / dq
    })?;

    let c = match case {
        CaseTag::A => curvature + f.f(0.0) * f.f(0.0) / kernel.u0v0(),
        _ => curvature,
    };

    let p0 = match case {
        CaseTag::A => {
            -(1.0 / kernel.v(0.0)) * d_f_over_u(kernel, f, 0.0) / kernel.dq(0.0) * kernel.q(0.0)
        }
        _ => 0.0,
    };
    let p1 = (1.0 / kernel.u(1.0)) * d_f_over_v(kernel, f, 1.0) / kernel.dq(1.0) * kernel.q(1.0);

    let kd = kernel.clone();
    let fd = f.clone();
    let density = Arc::new(move |t: f64| {
        let dq = kd.dq(t);
        let d1 = d_f_over_v(&kd, &fd, t);
        let d2 = dd_f_over_v(&kd, &fd, t);
        // -(1/v) d/dt { (d/dt [f/v]) / q' }
        -(1.0 / kd.v(t)) * (d2 / dq - d1 * kd.ddq(t) / (dq * dq))
    });

    Ok(OracleMeasure { case, c, p0, p1, theta_j, density })
}

/// Oracle mean integrated squared error `∫ f² / (1 + c)` of the optimal
/// shrinkage rule under continuous observation (zero in case C).
pub fn oracle_mise(
    kernel: &TriangularKernel,
    f: &FunctionModel,
    quad: &QuadratureRule,
) -> Result<f64> {
    let measure = oracle_measure(kernel, f, 1.0, quad)?;
    if measure.case == CaseTag::C {
        return Ok(0.0);
    }
    let energy = quad.integrate(0.0, 1.0, |t| f.f(t) * f.f(t))?;
    Ok(energy / (1.0 + measure.c))
}

/// Check the optimality condition `∫ K(s, t) ξ*(ds) = scale · f(t)` on a
/// uniform grid of `grid_points` points, returning the largest absolute
/// residual. The kernel has a kink on the diagonal, so the integral is
/// split at `s = t`.
///
/// Case C has no measure ingredients to verify and is rejected.
pub fn verify_optimality(
    measure: &OracleMeasure,
    kernel: &TriangularKernel,
    f: &FunctionModel,
    grid_points: usize,
    quad: &QuadratureRule,
) -> Result<f64> {
    if measure.case == CaseTag::C {
        return Err(Error::Contract(
            "case C: the optimal measure is a single atom and needs no verification".into(),
        ));
    }
    if grid_points < 2 {
        return Err(Error::Contract(format!(
            "verification grid needs at least 2 points, got {grid_points}"
        )));
    }
    let mut worst = 0.0_f64;
    for i in 0..grid_points {
        let t = i as f64 / (grid_points - 1) as f64;
        // s ≤ t: K(s,t) = u(s) v(t);  s ≥ t: K(s,t) = u(t) v(s).
        let left = if t > 0.0 {
            quad.integrate(0.0, t, |s| kernel.u(s) * kernel.v(t) * measure.density(s))?
        } else {
            0.0
        };
        let right = if t < 1.0 {
            quad.integrate(t, 1.0, |s| kernel.u(t) * kernel.v(s) * measure.density(s))?
        } else {
            0.0
        };
        let atoms = measure.p0 * kernel.covariance(0.0, t)?
            + measure.p1 * kernel.covariance(1.0, t)?;
        let lhs = measure.scale() * (atoms + left + right);
        let rhs = measure.scale() * f.f(t);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Risk of the optimal shrinkage rule versus plain projection for a
/// coefficient sequence `θ̄` (noise-normalized): returns
/// `(S/(1+S), Σ θ̄_j²/(1+θ̄_j²))` with `S = Σ θ̄_j²`.
///
/// The first (joint shrinkage) risk never exceeds the second
/// (componentwise) one, with equality only when at most one coefficient is
/// nonzero.
pub fn tsybakov_comparison(theta_bar: &[f64]) -> Result<(f64, f64)> {
    if theta_bar.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("coefficient sequence must be finite".into()));
    }
    let s: f64 = theta_bar.iter().map(|x| x * x).sum();
    let star = s / (1.0 + s);
    let tilde: f64 = theta_bar.iter().map(|x| x * x / (1.0 + x * x)).sum();
    Ok((star, tilde))
}
