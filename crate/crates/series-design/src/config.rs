//! JSON run configuration: one schema shared by all CLI subcommands, with
//! strict field checking so typos surface as configuration errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{FunctionModel, OrthonormalBasis};
use crate::design::{optimize_design, DesignGrid, DEFAULT_MIN_GAP};
use crate::kernel::TriangularKernel;
use crate::numerics::{PsoConfig, QuadratureRule};
use crate::simulator::EstimatorKind;
use crate::{Error, Result};

/// Comparative 4-point design used by the published benchmark studies.
pub const COMPARATIVE_N4: [f64; 4] = [0.0, 0.45, 0.90, 1.0];
/// Comparative 7-point design used by the published benchmark studies.
pub const COMPARATIVE_N7: [f64; 7] = [0.0, 0.18, 0.36, 0.54, 0.72, 0.90, 1.0];

/// Kernel choice in a configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(s,t) = exp(-L |s - t|)`.
    #[serde(rename = "exponential")]
    Exponential {
        #[serde(rename = "L")]
        l: f64,
    },
    /// `K(s,t) = min(s, t)`.
    #[serde(rename = "brownian")]
    Brownian,
}

impl KernelSpec {
    /// Materialize the kernel.
    pub fn build(&self) -> Result<TriangularKernel> {
        match self {
            KernelSpec::Exponential { l } => TriangularKernel::exponential(*l)
                .map_err(|e| Error::Config(format!("kernel: {e}"))),
            KernelSpec::Brownian => Ok(TriangularKernel::brownian()),
        }
    }
}

/// Basis choice in a configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    /// `"cosine"` or `"trig"`.
    pub kind: String,
    #[serde(rename = "J")]
    pub j: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { kind: "cosine".into(), j: 3 }
    }
}

impl BasisSpec {
    /// Materialize the basis.
    pub fn build(&self) -> Result<OrthonormalBasis> {
        match self.kind.as_str() {
            "cosine" => OrthonormalBasis::cosine(self.j)
                .map_err(|e| Error::Config(format!("basis: {e}"))),
            "trig" => OrthonormalBasis::trig(self.j)
                .map_err(|e| Error::Config(format!("basis: {e}"))),
            other => Err(Error::Config(format!(
                "basis.kind must be \"cosine\" or \"trig\", got \"{other}\""
            ))),
        }
    }
}

/// Design choice: explicit points or a named design.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DesignSpec {
    /// A named design: `"optimal"` (runs the optimizer, needs `n`),
    /// `"equidistant"` (needs `n`), `"comparative-n4"`, `"comparative-n7"`.
    Named { named: String },
    /// Explicit points spanning `[0, 1]`.
    Points {
        points: Vec<f64>,
        #[serde(default)]
        min_gap: Option<f64>,
    },
}

/// One configuration file drives every subcommand; each command reads the
/// subset of fields it needs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub basis: BasisSpec,
    /// Regression model identifier (`"4t(t-1)"`, `"sqrt(t(1-t))"`).
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub design: Option<DesignSpec>,
    #[serde(default)]
    pub estimators: Option<Vec<EstimatorKind>>,
    /// Monte-Carlo replicates.
    #[serde(default, rename = "S")]
    pub s: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of design points for `optimize` and named designs needing one.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub min_gap: Option<f64>,
    #[serde(default)]
    pub quadrature: Option<QuadratureRule>,
    #[serde(default)]
    pub pso: Option<PsoConfig>,
    /// Target coefficient scale for the `oracle` subcommand.
    #[serde(default)]
    pub theta_j: Option<f64>,
}

impl RunConfig {
    /// Minimal configuration around a kernel.
    pub fn for_kernel(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            basis: BasisSpec::default(),
            model: None,
            design: None,
            estimators: None,
            s: None,
            seed: None,
            n: None,
            min_gap: None,
            quadrature: None,
            pso: None,
            theta_j: None,
        }
    }

    /// The quadrature rule, ready for use.
    pub fn quadrature(&self) -> Result<QuadratureRule> {
        let mut quad = self.quadrature.clone().unwrap_or_default();
        quad.ensure_ready()?;
        Ok(quad)
    }

    /// Effective seed: CLI override, then the config value, then 0.
    pub fn effective_seed(&self, cli_seed: Option<u64>) -> u64 {
        cli_seed.or(self.seed).unwrap_or(0)
    }

    /// Swarm settings, seeded from the run seed unless given explicitly.
    pub fn pso(&self, seed: u64) -> PsoConfig {
        self.pso.clone().unwrap_or_else(|| PsoConfig::default().with_seed(seed))
    }

    /// The regression model; errors when the command needs one and the
    /// config omits it.
    pub fn model(&self) -> Result<FunctionModel> {
        let name = self
            .model
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs a \"model\" entry".into()))?;
        FunctionModel::builtin(name)
    }

    /// Estimators to evaluate; defaults to shrunk + unbiased. An explicitly
    /// empty list is rejected rather than silently simulating nothing.
    pub fn estimators(&self) -> Result<Vec<EstimatorKind>> {
        match &self.estimators {
            None => Ok(vec![EstimatorKind::Shrunk, EstimatorKind::Blue]),
            Some(list) if list.is_empty() => Err(Error::Config(
                "\"estimators\" must list at least one estimator".into(),
            )),
            Some(list) => Ok(list.clone()),
        }
    }

    /// Resolve the design entry to concrete points, running the optimizer
    /// for `"optimal"`. Returns the design and a stable display name.
    pub fn resolve_design(
        &self,
        kernel: &TriangularKernel,
        basis: &OrthonormalBasis,
        seed: u64,
        quad: &QuadratureRule,
        parallel: bool,
    ) -> Result<(DesignGrid, String)> {
        let min_gap = self.min_gap.unwrap_or(DEFAULT_MIN_GAP);
        match self.design.as_ref() {
            None => Err(Error::Config("this command needs a \"design\" entry".into())),
            Some(DesignSpec::Points { points, min_gap: local }) => {
                let design = DesignGrid::new(points.clone(), local.unwrap_or(min_gap))
                    .map_err(|e| Error::Config(format!("design.points: {e}")))?;
                Ok((design, "custom".into()))
            }
            Some(DesignSpec::Named { named }) => match named.as_str() {
                "optimal" => {
                    let n = self.n.ok_or_else(|| {
                        Error::Config("design \"optimal\" needs the \"n\" entry".into())
                    })?;
                    let (design, _) = optimize_design(
                        kernel,
                        basis,
                        n,
                        min_gap,
                        &self.pso(seed),
                        quad,
                        parallel,
                    )?;
                    Ok((design, format!("optimal-n{n}")))
                }
                "equidistant" => {
                    let n = self.n.ok_or_else(|| {
                        Error::Config("design \"equidistant\" needs the \"n\" entry".into())
                    })?;
                    Ok((DesignGrid::equidistant(n)?, format!("equidistant-n{n}")))
                }
                "comparative-n4" => Ok((
                    DesignGrid::new(COMPARATIVE_N4.to_vec(), min_gap)?,
                    "comparative-n4".into(),
                )),
                "comparative-n7" => Ok((
                    DesignGrid::new(COMPARATIVE_N7.to_vec(), min_gap)?,
                    "comparative-n7".into(),
                )),
                other => Err(Error::Config(format!(
                    "unknown design \"{other}\"; use \"optimal\", \"equidistant\", \
                     \"comparative-n4\", \"comparative-n7\", or explicit points"
                ))),
            },
        }
    }
}

/// Load and parse a configuration file, annotating schema violations with
/// the file path and position.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"kernel": {"type": "exponential", "L": 1.0}}"#).unwrap();
        assert_eq!(cfg.kernel, KernelSpec::Exponential { l: 1.0 });
        assert_eq!(cfg.basis.j, 3);
    }

    #[test]
    fn rejects_unknown_fields() {
        let r: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"kernel": {"type": "brownian"}, "bogus": 1}"#);
        assert!(r.is_err());
    }
}
