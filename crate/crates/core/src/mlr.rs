//! Multiple linear regression by least squares.
//!
//! The design matrix `[1 | X]` is factored with Householder QR and column
//! pivoting, and `R beta = Q^T y` is solved by back-substitution. A pivot
//! smaller than `RANK_TOLERANCE` times the largest pivot means the remaining
//! columns are linear combinations of the ones already chosen.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum MlrError {
    #[error("design has {rows} rows but {targets} targets")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("{rows} rows cannot determine {needed} coefficients")]
    InsufficientData { rows: usize, needed: usize },
    #[error("design matrix or target contains non-finite values")]
    NonFinite,
    #[error("design matrix is rank deficient; dependent columns: {}", dependent.join(", "))]
    Singular { dependent: Vec<String> },
    #[error("model expects {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
}

/// Fitted `y = b0 + b1 x1 + ... + bk xk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrModel {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub training_rows: usize,
}

impl MlrModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, MlrError> {
        predict_mlr(self, x)
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>, MlrError> {
        x.row_iter().map(|r| predict_mlr(self, r)).collect()
    }
}

/// Fit with generic feature names `x1..xk`.
pub fn fit_mlr(x: &Matrix, y: &[f64]) -> Result<MlrModel, MlrError> {
    let names: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    fit_mlr_named(x, y, &names)
}

pub fn fit_mlr_named<S: AsRef<str>>(x: &Matrix, y: &[f64], names: &[S]) -> Result<MlrModel, MlrError> {
    let (n, k) = (x.nrows(), x.ncols());
    assert_eq!(names.len(), k, "one name per feature column");
    if n != y.len() {
        return Err(MlrError::DimensionMismatch { rows: n, targets: y.len() });
    }
    let p = k + 1;
    if n < p {
        return Err(MlrError::InsufficientData { rows: n, needed: p });
    }
    if !x.is_finite() || !y.iter().all(|v| v.is_finite()) {
        return Err(MlrError::NonFinite);
    }

    // Column-major working copy of [1 | X].
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    cols.push(alloc::vec![1.0; n]);
    for j in 0..k {
        cols.push(x.column(j));
    }
    let mut rhs = y.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut largest_pivot = 0.0;

    for s in 0..p {
        let norm_sq = |c: &[f64]| c[s..].iter().map(|v| v * v).sum::<f64>();
        let mut pivot = s;
        let mut best = norm_sq(&cols[s]);
        for (j, col) in cols.iter().enumerate().skip(s + 1) {
            let ns = norm_sq(col);
            if ns > best {
                best = ns;
                pivot = j;
            }
        }
        cols.swap(s, pivot);
        perm.swap(s, pivot);

        let norm = libm::sqrt(best);
        if s == 0 {
            largest_pivot = norm;
        }
        if norm == 0.0 || norm <= RANK_TOLERANCE * largest_pivot {
            let dependent = perm[s..]
                .iter()
                .map(|&c| if c == 0 { "intercept".to_string() } else { names[c - 1].as_ref().to_string() })
                .collect();
            return Err(MlrError::Singular { dependent });
        }

        let alpha = if cols[s][s] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[s][s..].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(&target[s..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in target[s..].iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in cols.iter_mut().skip(s + 1) {
            reflect(col);
        }
        reflect(&mut rhs);
        cols[s][s] = alpha;
    }

    let mut z = alloc::vec![0.0; p];
    for s in (0..p).rev() {
        let mut acc = rhs[s];
        for c in s + 1..p {
            acc -= cols[c][s] * z[c];
        }
        z[s] = acc / cols[s][s];
    }
    let mut coefficients = alloc::vec![0.0; p];
    for (s, &c) in perm.iter().enumerate() {
        coefficients[c] = z[s];
    }

    Ok(MlrModel {
        coefficients,
        feature_names: names.iter().map(|s| s.as_ref().to_string()).collect(),
        training_rows: n,
    })
}

pub fn predict_mlr(m: &MlrModel, x: &[f64]) -> Result<f64, MlrError> {
    if x.len() != m.n_features() {
        return Err(MlrError::FeatureCount { expected: m.n_features(), got: x.len() });
    }
    Ok(m.coefficients[0] + m.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
}
