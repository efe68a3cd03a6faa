//! Orthonormal bases of `L²[0, 1]` and regression-function models.
//!
//! Two trigonometric families are built in: the cosine-only system
//! `1, √2 cos(2πt), √2 cos(4πt), ...` and the full trigonometric system
//! `1, √2 cos(2πt), √2 sin(2πt), ...`. Custom bases can be supplied as
//! closures; [`OrthonormalBasis::gram_check`] measures how orthonormal a
//! candidate system actually is.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::kernel::check_unit;
use crate::numerics::QuadratureRule;
use crate::{Error, Result};

type VectorFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which orthonormal family a basis uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `1, √2 cos(2π k t)` — adapted to functions symmetric about `t = 1/2`.
    CosineOnly,
    /// `1, √2 cos(2π k t), √2 sin(2π k t)` interleaved.
    TrigFull,
    /// User-supplied evaluation and derivative closures.
    Custom,
}

/// A finite orthonormal system `φ_1, ..., φ_J` with derivatives.
#[derive(Clone)]
pub struct OrthonormalBasis {
    j: usize,
    kind: BasisKind,
    custom_eval: Option<VectorFn>,
    custom_deriv: Option<VectorFn>,
}

impl fmt::Debug for OrthonormalBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrthonormalBasis")
            .field("j", &self.j)
            .field("kind", &self.kind)
            .finish()
    }
}

impl OrthonormalBasis {
    /// Cosine-only basis with `j` functions.
    pub fn cosine(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::Contract("basis needs at least one function".into()));
        }
        Ok(Self { j, kind: BasisKind::CosineOnly, custom_eval: None, custom_deriv: None })
    }

    /// Full trigonometric basis with `j` functions.
    pub fn trig(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::Contract("basis needs at least one function".into()));
        }
        Ok(Self { j, kind: BasisKind::TrigFull, custom_eval: None, custom_deriv: None })
    }

    /// Custom basis from closures returning all `j` values (resp.
    /// derivatives) at a point.
    pub fn custom(
        j: usize,
        eval: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        deriv: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if j == 0 {
            return Err(Error::Contract("basis needs at least one function".into()));
        }
        Ok(Self {
            j,
            kind: BasisKind::Custom,
            custom_eval: Some(Arc::new(eval)),
            custom_deriv: Some(Arc::new(deriv)),
        })
    }

    /// Number of basis functions.
    pub fn j(&self) -> usize {
        self.j
    }

    /// Which family this basis belongs to.
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Values `Φ(t) = (φ_1(t), ..., φ_J(t))`; `t` must lie in `[0, 1]`.
    pub fn phi(&self, t: f64) -> Result<Vec<f64>> {
        check_unit("t", t)?;
        Ok(match self.kind {
            BasisKind::CosineOnly => (1..=self.j)
                .map(|k| {
                    if k == 1 {
                        1.0
                    } else {
                        2.0_f64.sqrt() * (2.0 * PI * (k - 1) as f64 * t).cos()
                    }
                })
                .collect(),
            BasisKind::TrigFull => (1..=self.j)
                .map(|k| {
                    if k == 1 {
                        1.0
                    } else if k % 2 == 0 {
                        let m = (k / 2) as f64;
                        2.0_f64.sqrt() * (2.0 * PI * m * t).cos()
                    } else {
                        let m = (k / 2) as f64;
                        2.0_f64.sqrt() * (2.0 * PI * m * t).sin()
                    }
                })
                .collect(),
            BasisKind::Custom => {
                let vals = (self.custom_eval.as_ref().expect("custom basis has eval"))(t);
                if vals.len() != self.j {
                    return Err(Error::Contract(format!(
                        "custom basis returned {} values, expected {}",
                        vals.len(),
                        self.j
                    )));
                }
                vals
            }
        })
    }

    /// Derivatives `Φ'(t)`; `t` must lie in `[0, 1]`.
    pub fn dphi(&self, t: f64) -> Result<Vec<f64>> {
        check_unit("t", t)?;
        Ok(match self.kind {
            BasisKind::CosineOnly => (1..=self.j)
                .map(|k| {
                    if k == 1 {
                        0.0
                    } else {
                        let w = 2.0 * PI * (k - 1) as f64;
                        -2.0_f64.sqrt() * w * (w * t).sin()
                    }
                })
                .collect(),
            BasisKind::TrigFull => (1..=self.j)
                .map(|k| {
                    if k == 1 {
                        0.0
                    } else if k % 2 == 0 {
                        let w = 2.0 * PI * (k / 2) as f64;
                        -2.0_f64.sqrt() * w * (w * t).sin()
                    } else {
                        let w = 2.0 * PI * (k / 2) as f64;
                        2.0_f64.sqrt() * w * (w * t).cos()
                    }
                })
                .collect(),
            BasisKind::Custom => {
                let vals = (self.custom_deriv.as_ref().expect("custom basis has deriv"))(t);
                if vals.len() != self.j {
                    return Err(Error::Contract(format!(
                        "custom basis derivative returned {} values, expected {}",
                        vals.len(),
                        self.j
                    )));
                }
                vals
            }
        })
    }

    /// Coefficients `θ_j = ∫ f φ_j` of `f` against this basis.
    pub fn fourier_coefficients(
        &self,
        f: impl Fn(f64) -> f64,
        quad: &QuadratureRule,
    ) -> Result<Vec<f64>> {
        quad.integrate_vec(0.0, 1.0, self.j, |t, out| {
            let phi = self.phi(t).expect("quadrature nodes stay inside [0, 1]");
            let ft = f(t);
            for (o, p) in out.iter_mut().zip(&phi) {
                *o = ft * p;
            }
        })
    }

    /// Largest absolute deviation of the Gram matrix `∫ Φ Φᵀ` from the
    /// identity. Near zero for a true orthonormal system; reported (not
    /// thrown) for custom candidates.
    pub fn gram_check(&self, quad: &QuadratureRule) -> Result<f64> {
        let j = self.j;
        let flat = quad.integrate_vec(0.0, 1.0, j * j, |t, out| {
            let phi = self.phi(t).expect("quadrature nodes stay inside [0, 1]");
            for a in 0..j {
                for b in 0..j {
                    out[a * j + b] = phi[a] * phi[b];
                }
            }
        })?;
        let mut dev = 0.0_f64;
        for a in 0..j {
            for b in 0..j {
                let target = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((flat[a * j + b] - target).abs());
            }
        }
        Ok(dev)
    }

    /// Finite series `t ↦ Σ θ_j φ_j(t)` as a reusable function object.
    pub fn reconstruct(&self, theta: &[f64]) -> Result<SeriesFunction> {
        if theta.len() != self.j {
            return Err(Error::Contract(format!(
                "coefficient vector has length {}, basis has {} functions",
                theta.len(),
                self.j
            )));
        }
        Ok(SeriesFunction { basis: self.clone(), theta: theta.to_vec() })
    }
}

/// A finite series expansion `Σ θ_j φ_j` bound to its basis.
#[derive(Debug, Clone)]
pub struct SeriesFunction {
    basis: OrthonormalBasis,
    theta: Vec<f64>,
}

impl SeriesFunction {
    /// Evaluate the series at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let phi = self.basis.phi(t)?;
        Ok(phi.iter().zip(&self.theta).map(|(p, c)| p * c).sum())
    }

    /// The coefficients defining the series.
    pub fn coefficients(&self) -> &[f64] {
        &self.theta
    }
}

/// A regression-function model: the function, its first two derivatives, and
/// whether the model is smooth enough (`C²`) for the closed-form oracle.
#[derive(Clone)]
pub struct FunctionModel {
    /// Identifier used in configuration files and reports.
    pub name: String,
    /// Whether `f`, `f'`, `f''` are finite on all of `[0, 1]`.
    pub smooth: bool,
    f: ScalarFn,
    df: ScalarFn,
    ddf: ScalarFn,
}

impl fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionModel")
            .field("name", &self.name)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl FunctionModel {
    /// Build a model from closures.
    pub fn custom(
        name: impl Into<String>,
        smooth: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            smooth,
            f: Arc::new(f),
            df: Arc::new(df),
            ddf: Arc::new(ddf),
        }
    }

    /// Smooth parabola `f(t) = 4t(t - 1)`, vanishing at both endpoints.
    pub fn parabola() -> Self {
        Self::custom("4t(t-1)", true, |t| 4.0 * t * (t - 1.0), |t| 8.0 * t - 4.0, |_| 8.0)
    }

    /// Semicircle-like model `f(t) = sqrt(t(1 - t))`; continuous but with
    /// unbounded derivatives at the endpoints, so not a `C²` model.
    pub fn sqrt_product() -> Self {
        Self::custom(
            "sqrt(t(1-t))",
            false,
            |t| (t * (1.0 - t)).max(0.0).sqrt(),
            |t| (1.0 - 2.0 * t) / (2.0 * (t * (1.0 - t)).sqrt()),
            |t| -0.25 * (t * (1.0 - t)).powf(-1.5),
        )
    }

    /// Look up a built-in model by its configuration identifier.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "4t(t-1)" => Ok(Self::parabola()),
            "sqrt(t(1-t))" => Ok(Self::sqrt_product()),
            other => Err(Error::Config(format!(
                "unknown model \"{other}\"; built-ins are \"4t(t-1)\" and \"sqrt(t(1-t))\""
            ))),
        }
    }

    /// Value `f(t)`.
    pub fn f(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// First derivative `f'(t)`.
    pub fn df(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    /// Second derivative `f''(t)`.
    pub fn ddf(&self, t: f64) -> f64 {
        (self.ddf)(t)
    }
}
