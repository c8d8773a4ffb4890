//! Ridge-regression readout and the R² score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_hpd, ComplexMatrix, LinalgError};

pub const DEFAULT_ALPHA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    #[error("no observations to fit")]
    Empty,
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("ridge alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("R² undefined: targets are constant and predictions differ from them")]
    UndefinedR2,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ReadoutError>;

/// Linear readout `y = W x`; the constant feature supplies the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    /// One row per target, one column per feature.
    pub weights: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn n_targets(&self) -> usize {
        self.weights.len()
    }

    /// Prediction for one feature row, one value per target.
    pub fn predict_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(ReadoutError::Dimension {
                what: "feature row length",
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// First-target prediction; panics on a length mismatch, so callers that
    /// cannot guarantee the layout should use [`RidgeModel::predict_row`].
    pub fn predict_scalar(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_features(), "feature row length");
        self.weights[0].iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.predict_row(x)).collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum()
    }
}

fn check_rows(rows: &[Vec<f64>], width: usize, what: &'static str) -> Result<()> {
    for row in rows {
        if row.len() != width {
            return Err(ReadoutError::Dimension {
                what,
                expected: width,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ReadoutError::NonFinite(what));
        }
    }
    Ok(())
}

/// Solves `(XᵀX + αI) Wᵀ = XᵀY` with one Cholesky factorization shared by all
/// targets. `x` and `y` hold one observation per row.
pub fn ridge_fit(x: &[Vec<f64>], y: &[Vec<f64>], alpha: f64) -> Result<RidgeModel> {
    if x.is_empty() {
        return Err(ReadoutError::Empty);
    }
    if y.len() != x.len() {
        return Err(ReadoutError::Dimension {
            what: "target rows",
            expected: x.len(),
            got: y.len(),
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ReadoutError::BadAlpha(alpha));
    }
    let p = x[0].len();
    let k = y[0].len();
    if p == 0 || k == 0 {
        return Err(ReadoutError::Empty);
    }
    check_rows(x, p, "feature rows")?;
    check_rows(y, k, "target rows")?;

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p * k];
    for (xr, yr) in x.iter().zip(y) {
        for i in 0..p {
            for j in i..p {
                gram[i * p + j] += xr[i] * xr[j];
            }
            for t in 0..k {
                rhs[i * k + t] += xr[i] * yr[t];
            }
        }
    }
    for i in 0..p {
        gram[i * p + i] += alpha;
        for j in 0..i {
            gram[i * p + j] = gram[j * p + i];
        }
    }
    let a = ComplexMatrix::from_real(p, p, &gram)?;
    let b = ComplexMatrix::from_real(p, k, &rhs)?;
    let wt = solve_hpd(&a, &b)?;
    let weights = (0..k).map(|t| (0..p).map(|i| wt[(i, t)].re).collect()).collect();
    Ok(RidgeModel { weights, alpha })
}

/// Single-target convenience wrapper around [`ridge_fit`].
pub fn ridge_fit_scalar(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<RidgeModel> {
    let targets: Vec<Vec<f64>> = y.iter().map(|v| vec![*v]).collect();
    ridge_fit(x, &targets, alpha)
}

/// `1 − SS_res / SS_tot`, with `SS_tot` taken about the mean of `y_true`.
///
/// Constant targets give 0.0 when the predictions match exactly and
/// [`ReadoutError::UndefinedR2`] otherwise.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(ReadoutError::Empty);
    }
    if y_pred.len() != y_true.len() {
        return Err(ReadoutError::Dimension {
            what: "prediction length",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(ReadoutError::NonFinite("r2 inputs"));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { Ok(0.0) } else { Err(ReadoutError::UndefinedR2) };
    }
    Ok(1.0 - ss_res / ss_tot)
}
