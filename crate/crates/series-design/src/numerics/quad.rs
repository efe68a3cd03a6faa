//! Composite Gauss–Legendre quadrature on arbitrary finite intervals.
//!
//! The default rule (order 16, 16 panels) integrates every integrand in this
//! crate — products of trigonometric polynomials with smooth kernel factors —
//! to well below 1e-12 on [0, 1].

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Composite Gauss–Legendre rule: `order` nodes per panel, `panels` equal
/// panels across the integration interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureRule {
    /// Nodes per panel (polynomial exactness up to degree `2*order - 1`).
    pub order: usize,
    /// Number of equal panels the interval is split into.
    pub panels: usize,
    /// Gauss–Legendre nodes on the reference interval [-1, 1].
    #[serde(skip)]
    nodes: Vec<f64>,
    /// Matching weights on [-1, 1] (positive, summing to 2).
    #[serde(skip)]
    weights: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(16, 16).expect("default rule parameters are valid")
    }
}

impl PartialEq for QuadratureRule {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.panels == other.panels
    }
}

impl QuadratureRule {
    /// Build a composite rule with `order` nodes per panel and `panels` panels.
    ///
    /// Errors with a contract violation when either count is zero or the
    /// order is large enough (> 64) that node computation would lose accuracy.
    pub fn gauss_legendre(order: usize, panels: usize) -> Result<Self> {
        if order == 0 || panels == 0 {
            return Err(Error::Contract(format!(
                "quadrature needs order >= 1 and panels >= 1, got order {order}, panels {panels}"
            )));
        }
        if order > 64 {
            return Err(Error::Contract(format!(
                "quadrature order {order} exceeds the supported maximum of 64"
            )));
        }
        let (nodes, weights) = legendre_nodes_weights(order);
        Ok(Self { order, panels, nodes, weights })
    }

    /// Re-derive the node/weight tables after deserialization (serde skips them).
    pub fn ensure_ready(&mut self) -> Result<()> {
        if self.nodes.len() != self.order {
            let rebuilt = Self::gauss_legendre(self.order, self.panels)?;
            self.nodes = rebuilt.nodes;
            self.weights = rebuilt.weights;
        }
        Ok(())
    }

    /// All (node, weight) pairs of the composite rule mapped onto `[a, b]`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.order * self.panels);
        let h = (b - a) / self.panels as f64;
        for p in 0..self.panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, half * w));
            }
        }
        out
    }

    /// Integrate `f` over `[a, b]`.
    ///
    /// Returns a "non-integrable sample" error naming the offending node when
    /// the integrand produces a non-finite value.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Contract(format!(
                "integration bounds must be finite, got [{a}, {b}]"
            )));
        }
        let mut acc = 0.0;
        for (t, w) in self.mapped_nodes(a, b) {
            let y = f(t);
            if !y.is_finite() {
                return Err(Error::NonIntegrable { node: t });
            }
            acc += w * y;
        }
        Ok(acc)
    }

    /// Integrate a vector-valued integrand over `[a, b]`, accumulating into a
    /// `dim`-length vector.
    pub fn integrate_vec<F: Fn(f64, &mut [f64])>(&self, a: f64, b: f64, dim: usize, f: F) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (t, w) in self.mapped_nodes(a, b) {
            buf.iter_mut().for_each(|x| *x = 0.0);
            f(t, &mut buf);
            for (a_i, b_i) in acc.iter_mut().zip(&buf) {
                if !b_i.is_finite() {
                    return Err(Error::NonIntegrable { node: t });
                }
                *a_i += w * b_i;
            }
        }
        Ok(acc)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// Legendre three-term recurrence.
fn legendre_nodes_weights(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Standard asymptotic initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_value_derivative(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_value_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Ascending node order; enforce exact symmetry of the rule.
    nodes.reverse();
    weights.reverse();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let m = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -m;
        nodes[j] = m;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Evaluate `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_value_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_positive_and_sum_to_interval_length() {
        for order in [1, 2, 3, 5, 8, 16, 32] {
            let rule = QuadratureRule::gauss_legendre(order, 3).unwrap();
            let total: f64 = rule.mapped_nodes(0.0, 1.0).iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14, "order {order}: weight sum {total}");
            assert!(rule.mapped_nodes(0.0, 1.0).iter().all(|&(_, w)| w > 0.0));
        }
    }

    #[test]
    fn nodes_stay_inside_interval() {
        let rule = QuadratureRule::default();
        for (t, _) in rule.mapped_nodes(0.25, 0.75) {
            assert!(t > 0.25 && t < 0.75);
        }
    }
}
