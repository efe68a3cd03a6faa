//! Seeded particle-swarm minimization over a box.
//!
//! The swarm update is the classic inertia-weight scheme with absorbing box
//! walls. All random draws come from a single counter-based generator in a
//! fixed order, and objective evaluations are pure, so results are bitwise
//! reproducible for a given seed — including under the parallel execution
//! mode, which only fans out the (side-effect-free) objective evaluations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::{Error, Result};

/// Swarm hyperparameters. The defaults (40 particles, 300 iterations,
/// inertia 0.729, cognitive = social = 1.494) are the standard
/// constriction-equivalent setting and are used throughout the crate.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            iterations: 300,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            seed: 0,
        }
    }
}

impl PsoConfig {
    /// Same hyperparameters, different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Contract(format!(
                "swarm_size must be at least 2, got {}",
                self.swarm_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Contract("iterations must be positive".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Contract(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Minimize `objective` over the box `[lower[d], upper[d]]` for each
/// dimension `d`. Non-finite objective values are treated as +∞, so the
/// objective may reject infeasible points that way.
///
/// Returns `(argmin, value)`. The value never exceeds the objective at any
/// particle the swarm visited, in particular at every initial particle.
pub fn pso_minimize<F>(
    objective: F,
    lower: &[f64],
    upper: &[f64],
    cfg: &PsoConfig,
    parallel: bool,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = lower.len();
    if dim == 0 {
        return Err(Error::Contract("search space must have at least one dimension".into()));
    }
    if upper.len() != dim {
        return Err(Error::Contract(format!(
            "bounds length mismatch: lower has {dim}, upper has {}",
            upper.len()
        )));
    }
    for d in 0..dim {
        if !(lower[d].is_finite() && upper[d].is_finite() && lower[d] < upper[d]) {
            return Err(Error::Contract(format!(
                "invalid bounds in dimension {d}: [{}, {}]",
                lower[d], upper[d]
            )));
        }
    }

    let m = cfg.swarm_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sanitize = |v: f64| if v.is_finite() { v } else { f64::INFINITY };

    // Initial positions uniform in the box, zero initial velocities.
    let mut pos: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|d| rng.gen_range(lower[d]..upper[d])).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = vec![vec![0.0; dim]; m];

    let values = exec::map_indexed(parallel, m, |i| sanitize(objective(&pos[i])));
    let mut pbest = pos.clone();
    let mut pbest_val = values;
    let (mut gbest_idx, mut gbest_val) = (0usize, f64::INFINITY);
    for (i, &v) in pbest_val.iter().enumerate() {
        if v < gbest_val {
            gbest_val = v;
            gbest_idx = i;
        }
    }
    let mut gbest = pbest[gbest_idx].clone();

    for _ in 0..cfg.iterations {
        for i in 0..m {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + cfg.social * r2 * (gbest[d] - pos[i][d]);
                let mut x = pos[i][d] + v;
                if x < lower[d] {
                    x = lower[d];
                    vel[i][d] = 0.0;
                } else if x > upper[d] {
                    x = upper[d];
                    vel[i][d] = 0.0;
                } else {
                    vel[i][d] = v;
                }
                pos[i][d] = x;
            }
        }
        let values = exec::map_indexed(parallel, m, |i| sanitize(objective(&pos[i])));
        for (i, &v) in values.iter().enumerate() {
            if v < pbest_val[i] {
                pbest_val[i] = v;
                pbest[i] = pos[i].clone();
            }
        }
        for i in 0..m {
            if pbest_val[i] < gbest_val {
                gbest_val = pbest_val[i];
                gbest_idx = i;
            }
        }
        gbest = pbest[gbest_idx].clone();
    }

    if !gbest_val.is_finite() {
        return Err(Error::Numerical(
            "particle swarm found no finite objective value in the search box".into(),
        ));
    }
    Ok((gbest, gbest_val))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_five_dimensional() {
        let cfg = PsoConfig::default();
        let (x, v) = pso_minimize(
            |p| p.iter().map(|x| x * x).sum(),
            &[-4.0; 5],
            &[5.0; 5],
            &cfg,
            false,
        )
        .unwrap();
        assert!(v < 1e-6, "sphere minimum not reached: {v}");
        assert!(x.iter().all(|c| c.abs() < 1e-3));
    }

    #[test]
    fn rejects_empty_dimension() {
        let cfg = PsoConfig::default();
        let err = pso_minimize(|_| 0.0, &[], &[], &cfg, false).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
