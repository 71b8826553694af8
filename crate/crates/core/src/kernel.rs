//! RBF Gram matrices for training and train-vs-query evaluation.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// RBF kernel parameters: k(a, b) = exp(−‖a − b‖² / σ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<F: Real> {
    pub sigma: F,
}

impl<F: Real> KernelSpec<F> {
    pub fn new(sigma: F) -> Result<Self> {
        if !(sigma.is_finite() && sigma > F::zero()) {
            return Err(Error::config(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    fn eval(&self, a: ArrayView1<'_, F>, b: ArrayView1<'_, F>) -> F {
        let mut sq = F::zero();
        for (x, y) in a.iter().zip(b.iter()) {
            let diff = *x - *y;
            sq += diff * diff;
        }
        (-sq / (self.sigma * self.sigma)).exp()
    }
}

fn ensure_finite<F: Real>(x: ArrayView2<'_, F>, what: &str) -> Result<()> {
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::malformed(format!("{what} has non-finite entry {v} at row {i}, column {j}")));
    }
    Ok(())
}

/// Kernel matrix of the training rows: K[i][j] = exp(−‖xᵢ − xⱼ‖²/σ²).
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric with a unit diagonal.
pub fn rbf_gram<F: Real>(x: ArrayView2<'_, F>, spec: KernelSpec<F>) -> Result<Array2<F>> {
    ensure_finite(x, "kernel input")?;
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = F::one();
        for j in 0..i {
            let v = spec.eval(x.row(i), x.row(j));
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(k)
}

/// Kernel evaluations of queries against the training rows; column j holds
/// k_* for query j.
pub fn rbf_cross<F: Real>(
    x_train: ArrayView2<'_, F>,
    x_query: ArrayView2<'_, F>,
    spec: KernelSpec<F>,
) -> Result<Array2<F>> {
    if x_train.ncols() != x_query.ncols() {
        return Err(Error::schema(format!(
            "query has {} feature columns but training data has {}",
            x_query.ncols(),
            x_train.ncols()
        )));
    }
    ensure_finite(x_train, "kernel input")?;
    ensure_finite(x_query, "kernel query")?;
    let mut k = Array2::zeros((x_train.nrows(), x_query.nrows()));
    for i in 0..x_train.nrows() {
        for j in 0..x_query.nrows() {
            k[[i, j]] = spec.eval(x_train.row(i), x_query.row(j));
        }
    }
    Ok(k)
}

/// Plain inner-product Gram Y Yᵀ of row-sample data, mirrored the same way.
pub fn linear_gram<F: Real>(y: ArrayView2<'_, F>) -> Array2<F> {
    let n = y.nrows();
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = y.row(i).dot(&y.row(j));
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}
