//! Triangular (Markovian) covariance kernels on the unit interval.
//!
//! A triangular kernel factorizes as `K(s, t) = u(min(s,t)) · v(max(s,t))`
//! with `v > 0` and a strictly increasing quotient `q = u / v`. Processes
//! with such covariances are Gaussian Markov processes; the quotient `q`
//! plays the role of an intrinsic time scale, and all design and estimation
//! formulas in this crate are expressed through `u`, `v`, `q` and their
//! derivatives.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Result};

/// Tolerance under which an initial observation `f(0)` (or `u(0)`) counts as
/// zero when classifying the estimation problem.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Classification of the estimation problem implied by the kernel and the
/// value of the regression function at zero:
///
/// * `A` — `u(0) ≠ 0`: the process has noise at `t = 0`;
/// * `B` — `u(0) = 0` and `f(0) = 0`: the origin is observed without noise
///   and carries no signal;
/// * `C` — `u(0) = 0` and `f(0) ≠ 0`: the noiseless origin observation pins
///   down part of the signal exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    A,
    B,
    C,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseTag::A => write!(f, "A"),
            CaseTag::B => write!(f, "B"),
            CaseTag::C => write!(f, "C"),
        }
    }
}

/// Outcome of [`TriangularKernel::validate`]: structural violations are
/// collected (not thrown), benign observations become notes.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// True when no violations were found.
    pub ok: bool,
    /// Benign observations, e.g. a zero-variance origin.
    pub notes: Vec<String>,
    /// Structural problems that make the kernel unusable.
    pub violations: Vec<String>,
}

/// A triangular covariance kernel `K(s,t) = u(min) v(max)` described by the
/// factor functions and their first two derivatives.
#[derive(Clone)]
pub struct TriangularKernel {
    /// Human-readable family name (`"exponential"`, `"brownian"`, ...).
    pub name: String,
    /// Family parameters (`[L]` for exponential, empty for Brownian).
    pub params: Vec<f64>,
    u: ScalarFn,
    du: ScalarFn,
    ddu: ScalarFn,
    v: ScalarFn,
    dv: ScalarFn,
    ddv: ScalarFn,
}

impl fmt::Debug for TriangularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TriangularKernel")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl TriangularKernel {
    /// Build a kernel from explicit factor functions and derivatives.
    ///
    /// The derivatives are trusted as given; [`validate`](Self::validate)
    /// checks the structural requirements on a grid.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: impl Into<String>,
        params: Vec<f64>,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            u: Arc::new(u),
            du: Arc::new(du),
            ddu: Arc::new(ddu),
            v: Arc::new(v),
            dv: Arc::new(dv),
            ddv: Arc::new(ddv),
        }
    }

    /// Exponential (Ornstein–Uhlenbeck) kernel `K(s,t) = exp(-L |s - t|)`
    /// with `u(t) = exp(Lt)`, `v(t) = exp(-Lt)`, `q(t) = exp(2Lt)`.
    pub fn exponential(l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Contract(format!(
                "exponential kernel rate L must be positive and finite, got {l}"
            )));
        }
        Ok(Self::custom(
            "exponential",
            vec![l],
            move |t| (l * t).exp(),
            move |t| l * (l * t).exp(),
            move |t| l * l * (l * t).exp(),
            move |t| (-l * t).exp(),
            move |t| -l * (-l * t).exp(),
            move |t| l * l * (-l * t).exp(),
        ))
    }

    /// Brownian-motion kernel `K(s,t) = min(s,t)` with `u(t) = t`, `v ≡ 1`,
    /// `q(t) = t`.
    pub fn brownian() -> Self {
        Self::custom(
            "brownian",
            vec![],
            |t| t,
            |_| 1.0,
            |_| 0.0,
            |_| 1.0,
            |_| 0.0,
            |_| 0.0,
        )
    }

    /// Factor `u` at `t`.
    pub fn u(&self, t: f64) -> f64 {
        (self.u)(t)
    }

    /// First derivative `u'` at `t`.
    pub fn du(&self, t: f64) -> f64 {
        (self.du)(t)
    }

    /// Second derivative `u''` at `t`.
    pub fn ddu(&self, t: f64) -> f64 {
        (self.ddu)(t)
    }

    /// Factor `v` at `t`.
    pub fn v(&self, t: f64) -> f64 {
        (self.v)(t)
    }

    /// First derivative `v'` at `t`.
    pub fn dv(&self, t: f64) -> f64 {
        (self.dv)(t)
    }

    /// Second derivative `v''` at `t`.
    pub fn ddv(&self, t: f64) -> f64 {
        (self.ddv)(t)
    }

    /// Product `u(0) v(0)` — the variance of the process at the origin.
    pub fn u0v0(&self) -> f64 {
        self.u(0.0) * self.v(0.0)
    }

    /// Covariance `K(s, t) = u(min) v(max)`; both arguments must lie in
    /// `[0, 1]`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        check_unit("s", s)?;
        check_unit("t", t)?;
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        Ok(self.u(lo) * self.v(hi))
    }

    /// Quotient `q(t) = u(t) / v(t)`.
    pub fn q(&self, t: f64) -> f64 {
        self.u(t) / self.v(t)
    }

    /// Derivative `q'(t) = (u'v - uv') / v²`.
    pub fn dq(&self, t: f64) -> f64 {
        let (u, du, v, dv) = (self.u(t), self.du(t), self.v(t), self.dv(t));
        (du * v - u * dv) / (v * v)
    }

    /// Second derivative of `q` via the quotient rule.
    pub fn ddq(&self, t: f64) -> f64 {
        let (u, du, ddu) = (self.u(t), self.du(t), self.ddu(t));
        let (v, dv, ddv) = (self.v(t), self.dv(t), self.ddv(t));
        (ddu * v - u * ddv) / (v * v) - 2.0 * dv * (du * v - u * dv) / (v * v * v)
    }

    /// Classify the estimation problem given the regression value `f(0)`.
    pub fn case_tag(&self, f0: f64, zero_tol: f64) -> CaseTag {
        if self.u(0.0).abs() > zero_tol {
            CaseTag::A
        } else if f0.abs() <= zero_tol {
            CaseTag::B
        } else {
            CaseTag::C
        }
    }

    /// Check the structural requirements on a uniform grid of `grid_size`
    /// points: `v > 0`, `q` strictly increasing (`q' > 0`), non-negative
    /// variance, and positive semidefiniteness of the covariance matrix.
    ///
    /// Violations are reported, not thrown; a kernel with `u(0) = 0` is valid
    /// and earns an explanatory note.
    pub fn validate(&self, grid_size: usize) -> Result<ValidationReport> {
        if grid_size < 3 {
            return Err(Error::Contract(format!(
                "validation grid needs at least 3 points, got {grid_size}"
            )));
        }
        let mut notes = Vec::new();
        let mut violations = Vec::new();
        let grid: Vec<f64> =
            (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();

        for &t in &grid {
            if !(self.v(t) > 0.0) {
                violations.push(format!("v({t}) = {} is not positive", self.v(t)));
                break;
            }
        }
        for &t in &grid {
            if self.u(t) * self.v(t) < 0.0 {
                violations.push(format!(
                    "variance K({t},{t}) = {} is negative",
                    self.u(t) * self.v(t)
                ));
                break;
            }
        }
        let mut increasing = true;
        for &t in &grid {
            if !(self.dq(t) > 0.0) {
                increasing = false;
                break;
            }
        }
        for w in grid.windows(2) {
            if !(self.q(w[1]) > self.q(w[0])) {
                increasing = false;
                break;
            }
        }
        if !increasing {
            violations.push("q not increasing".into());
        }

        if self.u(0.0).abs() <= DEFAULT_ZERO_TOL {
            notes.push("u(0)=0, zero-variance at t=0".into());
        }

        // PSD check of the covariance matrix on the grid.
        if violations.is_empty() {
            let sigma = crate::numerics::SymMatrix::from_fn(grid_size, |i, j| {
                let (lo, hi) = if grid[i] <= grid[j] { (grid[i], grid[j]) } else { (grid[j], grid[i]) };
                self.u(lo) * self.v(hi)
            });
            if let Err(e) = sigma.cholesky_psd_clamped(1e-12, 1e-8) {
                violations.push(format!("covariance matrix on the grid is not PSD: {e}"));
            }
        }

        Ok(ValidationReport { ok: violations.is_empty(), notes, violations })
    }
}

/// Reject points outside the unit interval.
pub(crate) fn check_unit(what: &'static str, t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) || !t.is_finite() {
        return Err(Error::Domain { what, value: t });
    }
    Ok(())
}
