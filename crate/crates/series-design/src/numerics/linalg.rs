//! Dense symmetric matrices sized for coefficient spaces (J is small), with
//! Cholesky factorization, a cyclic Jacobi eigensolver, and a PSD-aware
//! inverse that degrades gracefully to generalized inverses.

use crate::{Error, Result};

/// Default relative tolerance for rank decisions in
/// [`psd_solve_or_ginverse`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Dense symmetric matrix with full row-major storage.
///
/// Symmetry is a construction-time invariant: every constructor either
/// symmetrizes by design or rejects asymmetric input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.a[i * d.len() + i] = x;
        }
        m
    }

    /// Build from `f(i, j)`, evaluated once per unordered pair and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i * n + j] = v;
                m.a[j * n + i] = v;
            }
        }
        m
    }

    /// Build from explicit rows, rejecting ragged or asymmetric input.
    ///
    /// `sym_tol` is the largest tolerated absolute mismatch between `a[i][j]`
    /// and `a[j][i]`; mismatched pairs are a contract violation.
    pub fn try_from_rows(rows: &[Vec<f64>], sym_tol: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract(format!("matrix rows must all have length {n}")));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > sym_tol {
                    return Err(Error::Contract(format!(
                        "asymmetric input: a[{i}][{j}] = {} but a[{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Dimension of the (square) matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Set the symmetric pair `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    /// Rows as owned vectors.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.a[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }

    /// Elementwise sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect();
        Self { n: self.n, a }
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect();
        Self { n: self.n, a }
    }

    /// Scalar multiple.
    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, a: self.a.iter().map(|x| x * s).collect() }
    }

    /// Add `scale * v vᵀ` in place.
    pub fn add_outer(&mut self, v: &[f64], scale: f64) {
        assert_eq!(v.len(), self.n, "dimension mismatch");
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i * self.n + j] += scale * v[i] * v[j];
            }
        }
    }

    /// Rank-one matrix `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let mut m = Self::zeros(v.len());
        m.add_outer(v, 1.0);
        m
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| self.a[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Congruence transform `A · self · Aᵀ` for a general rectangular `A`
    /// given by rows; the result is symmetric of dimension `a_rows.len()`.
    pub fn congruence(&self, a_rows: &[Vec<f64>]) -> Self {
        let m = a_rows.len();
        let inner_applied: Vec<Vec<f64>> = a_rows.iter().map(|r| self.mul_vec(r)).collect();
        Self::from_fn(m, |r, s| {
            a_rows[r].iter().zip(&inner_applied[s]).map(|(a, b)| a * b).sum()
        })
    }

    /// Symmetric triple product `self · inner · self`.
    pub fn sandwich(&self, inner: &Self) -> Self {
        inner.congruence(&self.to_rows())
    }

    /// Strict Cholesky factorization; fails unless the matrix is positive
    /// definite with every pivot above `pivot_floor`.
    pub fn cholesky(&self, pivot_floor: f64) -> Result<CholeskyFactor> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= pivot_floor {
                        return Err(Error::NotPsd(format!(
                            "Cholesky pivot {s:.3e} at index {i} is at or below the floor {pivot_floor:.3e}"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    /// Cholesky factorization of a PSD matrix with exact-zero clamping:
    /// pivots below `clamp` are treated as exact zeros (the corresponding
    /// coordinate is deterministic), pivots below `-neg_tol · scale` raise a
    /// "not PSD" error, where `scale` is the largest diagonal entry.
    pub fn cholesky_psd_clamped(&self, clamp: f64, neg_tol: f64) -> Result<CholeskyFactor> {
        let n = self.n;
        let scale = (0..n).map(|i| self.get(i, i)).fold(0.0_f64, f64::max).max(1.0);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d < -neg_tol * scale {
                return Err(Error::NotPsd(format!(
                    "pivot {d:.3e} at index {j} is negative beyond tolerance"
                )));
            }
            if d < clamp {
                // Degenerate coordinate: the whole column must vanish too.
                for i in (j + 1)..n {
                    let mut s = self.get(i, j);
                    for k in 0..j {
                        s -= l[i * n + k] * l[j * n + k];
                    }
                    if s.abs() > (neg_tol * scale).sqrt().max(1e-8) {
                        return Err(Error::NotPsd(format!(
                            "zero pivot at index {j} but residual column entry {s:.3e} at row {i}"
                        )));
                    }
                }
                continue;
            }
            let root = d.sqrt();
            l[j * n + j] = root;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / root;
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    /// Eigen-decomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order with matching orthonormal
    /// eigenvectors as columns (`vectors[i][k]` is component `i` of the k-th
    /// eigenvector). Deterministic: fixed sweep order, fixed iteration cap.
    pub fn jacobi_eigh(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        let mut a = self.to_rows();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let scale = self.max_abs().max(1e-300);
        for _sweep in 0..64 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p][q].abs());
                }
            }
            if off <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k][p];
                        let vkq = v[k][q];
                        v[k][p] = c * vkp - s * vkq;
                        v[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
        let values: Vec<f64> = order.iter().map(|&k| a[k][k]).collect();
        let vectors: Vec<Vec<f64>> =
            (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
        (values, vectors)
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ` equal to the source matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// Apply the factor: `L z` (used to color standard normal draws).
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| (0..=i).map(|j| self.l[i * self.n + j] * z[j]).sum())
            .collect()
    }

    /// Solve `(L Lᵀ) x = b` by forward and backward substitution.
    ///
    /// Requires a strict factor (all pivots positive), as produced by
    /// [`SymMatrix::cholesky`].
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "dimension mismatch");
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.l[i * n + j] * y[j];
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.l[j * n + i] * x[j];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Inverse of the factored matrix as a symmetric matrix.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.solve(&e)
            })
            .collect();
        // Symmetrize against round-off.
        SymMatrix::from_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }
}

/// Invert a PSD matrix, or produce a generalized inverse when it is singular.
///
/// Tolerances are relative to the largest diagonal entry (or the largest
/// eigenvalue in the spectral branch). The three branches:
///
/// 1. positive definite to tolerance → plain inverse (full rank);
/// 2. a set of rows/columns is *structurally* zero (every entry below
///    `rel_tol · max_diag`) and the complement is positive definite → block
///    generalized inverse with exact zeros in the flagged rows/columns;
/// 3. anything else → spectral pseudoinverse (eigenvalues below
///    `rel_tol · λ_max` are treated as zero), with a logged warning.
///
/// Returns the inverse-like matrix and the numerical rank. Every branch
/// satisfies `B · B⁻ · B = B` up to round-off. A matrix with an eigenvalue
/// negative beyond tolerance is rejected as "not PSD"; asymmetric input is
/// prevented by the [`SymMatrix`] type itself.
pub fn psd_solve_or_ginverse(b: &SymMatrix, rel_tol: f64) -> Result<(SymMatrix, usize)> {
    let n = b.dim();
    if !b.is_finite() {
        return Err(Error::Contract("matrix entries must be finite".into()));
    }
    let max_diag = (0..n).map(|i| b.get(i, i)).fold(0.0_f64, f64::max);
    if (0..n).any(|i| b.get(i, i) < -rel_tol * max_diag.max(1.0)) {
        return Err(Error::NotPsd("negative diagonal entry".into()));
    }
    let zero_threshold = rel_tol * max_diag;
    let structural: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| b.get(i, j).abs() <= zero_threshold))
        .collect();

    if structural.is_empty() {
        if let Ok(chol) = b.cholesky(rel_tol * max_diag.max(1e-300)) {
            return Ok((chol.inverse(), n));
        }
    } else {
        let keep: Vec<usize> = (0..n).filter(|i| !structural.contains(i)).collect();
        let sub = SymMatrix::from_fn(keep.len(), |i, j| b.get(keep[i], keep[j]));
        if keep.is_empty() {
            return Ok((SymMatrix::zeros(n), 0));
        }
        if let Ok(chol) = sub.cholesky(rel_tol * max_diag.max(1e-300)) {
            let sub_inv = chol.inverse();
            let mut out = SymMatrix::zeros(n);
            for (ii, &i) in keep.iter().enumerate() {
                for (jj, &j) in keep.iter().enumerate() {
                    out.set_sym(i, j, sub_inv.get(ii, jj));
                }
            }
            return Ok((out, keep.len()));
        }
    }

    // Spectral fallback: rank deficiency beyond the structural pattern.
    log::warn!(
        "matrix is rank-deficient beyond its structural zero pattern; \
         falling back to a spectral pseudoinverse"
    );
    let (values, vectors) = b.jacobi_eigh();
    let lambda_max = values.iter().fold(0.0_f64, |m, &x| m.max(x));
    if let Some(&lambda_min) = values.first() {
        if lambda_min < -rel_tol * lambda_max.max(1.0) {
            return Err(Error::NotPsd(format!(
                "negative eigenvalue {lambda_min:.6e} beyond tolerance"
            )));
        }
    }
    let cut = rel_tol * lambda_max;
    let mut out = SymMatrix::zeros(n);
    let mut rank = 0;
    for (k, &lambda) in values.iter().enumerate() {
        if lambda > cut {
            rank += 1;
            let col: Vec<f64> = (0..n).map(|i| vectors[i][k]).collect();
            out.add_outer(&col, 1.0 / lambda);
        }
    }
    Ok((out, rank))
}
