//! Kernel discriminant analysis by spectral regression.
//!
//! Instead of solving the dense generalized eigenproblem of kernel discriminant
//! analysis, the discriminant directions are obtained in two cheap steps:
//!
//! 1. The response vectors are eigenvectors of the within-class averaging matrix
//!    `L` (entry `1/n_k` when samples `i` and `j` share class `k`) with eigenvalue
//!    one. That eigenspace is spanned by the class indicators, so the responses
//!    are built in closed form by orthogonalizing the indicators against the
//!    constant vector.
//! 2. The expansion coefficients solve `(K + delta I) omega = responses`, done here
//!    with a Cholesky factorization.
//!
//! [`direct_kda_oracle`] solves the original eigenproblem densely and is only meant
//! for verifying the fast path on small problems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Linear,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            other => Err(Error::InvalidConfig(format!("unknown kernel {other:?}"))),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Rbf => "rbf",
            KernelKind::Linear => "linear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// RBF bandwidth in `exp(-|x - y|^2 / (2 gamma^2))`; `None` picks it with
    /// [`median_gamma`] at training time.
    pub gamma: Option<f64>,
    pub regularization: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: KernelKind::Rbf,
            gamma: None,
            regularization: 0.01,
        }
    }
}

impl KernelConfig {
    pub fn linear(regularization: f64) -> Self {
        KernelConfig {
            kind: KernelKind::Linear,
            gamma: None,
            regularization,
        }
    }

    pub fn rbf(gamma: f64, regularization: f64) -> Self {
        KernelConfig {
            kind: KernelKind::Rbf,
            gamma: Some(gamma),
            regularization,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig("kernel.gamma must be positive".into()));
            }
        }
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return Err(Error::InvalidConfig("kernel.delta must be positive".into()));
        }
        Ok(())
    }

    /// Fills in a median-heuristic bandwidth for RBF kernels without one.
    pub fn resolve(&self, x: &DMatrix<f64>) -> Result<KernelConfig> {
        self.validate()?;
        let mut out = *self;
        if self.kind == KernelKind::Rbf && self.gamma.is_none() {
            out.gamma = Some(median_gamma(x)?);
        }
        Ok(out)
    }

    fn eval(&self, a: &[f64], b: &[f64], gamma: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * gamma * gamma)).exp()
            }
        }
    }

    fn gamma_for_eval(&self) -> Result<f64> {
        match (self.kind, self.gamma) {
            (KernelKind::Linear, _) => Ok(1.0),
            (KernelKind::Rbf, Some(g)) => Ok(g),
            (KernelKind::Rbf, None) => Err(Error::InvalidConfig("rbf kernel needs a resolved gamma".into())),
        }
    }
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Gram matrix of the rows of `x`. RBF kernels without a bandwidth use the median heuristic.
pub fn build_kernel(x: &DMatrix<f64>, cfg: &KernelConfig) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::DegenerateData(format!("need at least 2 samples, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let cfg = cfg.resolve(x)?;
    let gamma = cfg.gamma_for_eval()?;
    let data = rows(x);
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    if i == j && cfg.kind == KernelKind::Rbf {
                        1.0
                    } else {
                        cfg.eval(&data[i], &data[j], gamma)
                    }
                })
                .collect()
        })
        .collect();
    let mut k = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    Ok(k)
}

/// Kernel values between each row of `queries` and each row of `train`.
pub fn cross_kernel(queries: &DMatrix<f64>, train: &DMatrix<f64>, cfg: &KernelConfig) -> Result<DMatrix<f64>> {
    if queries.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "signature length {} vs training length {}",
            queries.ncols(),
            train.ncols()
        )));
    }
    if queries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let gamma = cfg.gamma_for_eval()?;
    let (q, t) = (rows(queries), rows(train));
    let values: Vec<Vec<f64>> = q
        .par_iter()
        .map(|a| t.iter().map(|b| cfg.eval(a, b, gamma)).collect())
        .collect();
    Ok(DMatrix::from_fn(q.len(), t.len(), |i, j| values[i][j]))
}

/// Median of the Euclidean distances over all pairs of rows. If more than
/// half the pairs coincide, the median of the non-zero distances is used.
pub fn median_gamma(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::DegenerateData("median bandwidth needs two samples".into()));
    }
    let data = rows(x);
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = data[i].iter().zip(&data[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(d2.sqrt());
        }
    }
    if dists.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    dists.sort_by(f64::total_cmp);
    let median = |v: &[f64]| {
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    };
    let mid = median(&dists);
    if mid > 0.0 {
        return Ok(mid);
    }
    let positive: Vec<f64> = dists.into_iter().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::DegenerateData("all samples are identical".into()));
    }
    Ok(median(&positive))
}

fn check_labels(labels: &[usize], classes: usize) -> Result<Vec<usize>> {
    if classes < 2 {
        return Err(Error::MissingClass("need at least two classes".into()));
    }
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l >= classes {
            return Err(Error::DimensionMismatch(format!("label {l} outside {classes} classes")));
        }
        counts[l] += 1;
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(k.to_string()));
    }
    Ok(counts)
}

/// The within-class averaging matrix: `1/n_k` where both samples belong to class `k`.
pub fn label_affinity(labels: &[usize], classes: usize) -> Result<DMatrix<f64>> {
    let counts = check_labels(labels, classes)?;
    let n = labels.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            1.0 / counts[labels[i]] as f64
        } else {
            0.0
        }
    }))
}

/// `classes - 1` orthonormal responses spanning the class-indicator space
/// orthogonal to the constant vector.
pub fn response_vectors(labels: &[usize], classes: usize) -> Result<DMatrix<f64>> {
    check_labels(labels, classes)?;
    let n = labels.len();
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    for k in 0..classes {
        let mut v = DVector::from_fn(n, |i, _| if labels[i] == k { 1.0 } else { 0.0 });
        let original = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v.axpy(-proj, b, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-10 * original {
            basis.push(v / norm);
        }
    }
    let responses = &basis[1..];
    if responses.len() != classes - 1 {
        return Err(Error::FactorizationFailure(format!(
            "expected {} responses, got {}",
            classes - 1,
            responses.len()
        )));
    }
    Ok(DMatrix::from_columns(responses))
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
        }
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::FactorizationFailure(format!(
                    "matrix not positive definite at pivot {j}"
                )));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.l.nrows();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Solves `(K + delta I) omega = responses` column by column.
pub fn solve_projection(k: &DMatrix<f64>, responses: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    if k.ncols() != n || responses.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "kernel {}x{} vs responses {}x{}",
            k.nrows(),
            k.ncols(),
            responses.nrows(),
            responses.ncols()
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig("regularization must be positive".into()));
    }
    if k.iter().chain(responses.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += delta;
    }
    let chol = Cholesky::factor(&a)?;
    let mut omega = DMatrix::zeros(n, responses.ncols());
    for (j, rhs) in responses.column_iter().enumerate() {
        let rhs = rhs.into_owned();
        let x = chol.solve(&rhs);
        let residual = (&a * &x - &rhs).amax();
        if !(residual < 1e-8) {
            return Err(Error::FactorizationFailure(format!(
                "residual {residual:e} in column {j}"
            )));
        }
        omega.set_column(j, &x);
    }
    Ok(omega)
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn canonical_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut pivot = 0.0f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Training data and expansion coefficients of a fitted projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    /// One training signature per row.
    pub train_signatures: DMatrix<f64>,
    /// `n x (classes - 1)` expansion coefficients.
    pub omega: DMatrix<f64>,
    /// Resolved kernel; RBF always carries a bandwidth.
    pub kernel: KernelConfig,
    pub class_names: Vec<String>,
}

impl ProjectionModel {
    /// Fits the projection; `labels[i]` indexes `class_names`.
    pub fn fit(x: &DMatrix<f64>, labels: &[usize], class_names: Vec<String>, kernel: &KernelConfig) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                x.nrows()
            )));
        }
        let kernel = kernel.resolve(x)?;
        let k = build_kernel(x, &kernel)?;
        let responses = response_vectors(labels, class_names.len())?;
        let mut omega = solve_projection(&k, &responses, kernel.regularization)?;
        canonical_signs(&mut omega);
        Ok(ProjectionModel {
            train_signatures: x.clone(),
            omega,
            kernel,
            class_names,
        })
    }

    pub fn dimension(&self) -> usize {
        self.train_signatures.ncols()
    }

    /// Projects each row of `queries` to `sum_i omega[i, j] k(x_i, query)`.
    pub fn project(&self, queries: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let kq = cross_kernel(queries, &self.train_signatures, &self.kernel)?;
        Ok(kq * &self.omega)
    }

    pub fn project_one(&self, signature: &[f64]) -> Result<Vec<f64>> {
        let q = DMatrix::from_row_slice(1, signature.len(), signature);
        Ok(self.project(&q)?.row(0).iter().copied().collect())
    }
}

/// Dense reference solution of the regularized discriminant eigenproblem
/// `K Lb K w = lambda (K K + delta K) w`, where `Lb = L - 11^T/n` is the
/// between-class form of the label affinity. The problem is reduced to the
/// range of `K` through its eigendecomposition. Returns the top `classes - 1`
/// eigenvectors as columns, each scaled to unit norm.
pub fn direct_kda_oracle(k: &DMatrix<f64>, labels: &[usize], classes: usize, delta: f64) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    if n > 64 {
        return Err(Error::OracleTooLarge(n));
    }
    if k.ncols() != n || labels.len() != n {
        return Err(Error::DimensionMismatch("oracle inputs disagree on sample count".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig("regularization must be positive".into()));
    }
    let mut lb = label_affinity(labels, classes)?;
    lb.add_scalar_mut(-1.0 / n as f64);

    let eig = SymmetricEigen::new(k.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return Err(Error::FactorizationFailure("kernel has no positive spectrum".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    if keep.len() < classes - 1 {
        return Err(Error::FactorizationFailure("kernel rank below class count".into()));
    }
    let u = DMatrix::from_columns(&keep.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    let lam = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i]));
    // With w = U a: diag(lam) U^T Lb U diag(lam) a = mu diag(lam^2 + delta lam) a.
    let scale = lam.map(|l| l / (l * l + delta * l).sqrt());
    let core = u.transpose() * &lb * &u;
    let r = keep.len();
    let sym = DMatrix::from_fn(r, r, |i, j| scale[i] * core[(i, j)] * scale[j]);
    let sym = (&sym + sym.transpose()) * 0.5;
    let inner = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| inner.eigenvalues[b].total_cmp(&inner.eigenvalues[a]));
    let mut columns = Vec::with_capacity(classes - 1);
    for &idx in order.iter().take(classes - 1) {
        let beta = inner.eigenvectors.column(idx);
        let alpha = DVector::from_fn(r, |i, _| beta[i] / (lam[i] * lam[i] + delta * lam[i]).sqrt());
        let w = &u * alpha;
        let norm = w.norm();
        if !(norm > 0.0) {
            return Err(Error::FactorizationFailure("zero oracle direction".into()));
        }
        columns.push(w / norm);
    }
    let mut out = DMatrix::from_columns(&columns);
    canonical_signs(&mut out);
    Ok(out)
}

/// Multiple correlation of each column of `target` with the span of the
/// columns of `basis` (plus an intercept). For a single basis column this is
/// the absolute Pearson correlation.
pub fn span_correlations(target: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = target.nrows();
    if basis.nrows() != n || n < 2 {
        return Err(Error::DimensionMismatch("projections disagree on sample count".into()));
    }
    let center = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c
    };
    let b = center(basis);
    let t = center(target);
    let svd = b.clone().svd(true, true);
    let mut out = Vec::with_capacity(t.ncols());
    for col in t.column_iter() {
        let y = col.into_owned();
        let total = y.norm_squared();
        if !(total > 0.0) {
            out.push(0.0);
            continue;
        }
        let coef = svd
            .solve(&y, 1e-12)
            .map_err(|e| Error::FactorizationFailure(e.to_string()))?;
        let resid = (&b * coef - &y).norm_squared();
        out.push((1.0 - resid / total).max(0.0).sqrt());
    }
    Ok(out)
}
