use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::error::{Error, Result};
use crate::matrix::{check_targets, dot, mean, Matrix};

/// L2-penalized least squares on standardized features; the intercept is not
/// penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub alpha: f64,
    /// Weights on the standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub scaler: Scaler,
}

pub fn fit_ridge(x: &Matrix, y: &[f64], alpha: f64) -> Result<RidgeModel> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid(format!("ridge alpha must be >= 0, got {alpha}")));
    }
    check_targets(y, x.rows(), "ridge")?;
    x.check_finite("ridge training features")?;
    if x.rows() == 0 {
        return Err(Error::invalid("ridge needs at least one training row"));
    }
    let scaler = Scaler::fit(x)?;
    let z = scaler.transform(x)?;
    let y_mean = mean(y);
    let (n, d) = (z.rows(), z.cols());
    let zm = DMatrix::from_row_slice(n, d, z.as_slice());
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = zm.tr_mul(&zm);
    for j in 0..d {
        gram[(j, j)] += alpha;
    }
    let rhs = zm.tr_mul(&yc);
    let singular = || {
        Error::Singular(format!(
            "ridge normal equations are singular at alpha = {alpha}; use alpha > 0"
        ))
    };
    let chol = gram.clone().cholesky().ok_or_else(singular)?;
    // Cholesky can succeed on a numerically rank-deficient matrix; reject tiny pivots.
    let l = chol.l_dirty();
    let scale = (0..d).map(|j| gram[(j, j)]).fold(0.0, f64::max).max(1.0);
    if (0..d).any(|j| l[(j, j)] * l[(j, j)] <= 1e-10 * scale) {
        return Err(singular());
    }
    let w = chol.solve(&rhs);
    let weights: Vec<f64> = w.iter().copied().collect();
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ridge produced non-finite weights".into()));
    }
    Ok(RidgeModel {
        alpha,
        weights,
        intercept: y_mean,
        scaler,
    })
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_cols(self.n_features(), "ridge prediction features")?;
        x.check_finite("ridge prediction features")?;
        let mut z = vec![0.0; self.n_features()];
        Ok(x
            .iter_rows()
            .map(|r| {
                self.scaler.transform_row(r, &mut z);
                self.intercept + dot(&z, &self.weights)
            })
            .collect())
    }

    /// Weights and intercept expressed on the raw feature scale.
    pub fn original_coefficients(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.scaler.stds)
            .map(|(w, s)| w / s)
            .collect();
        let b = self.intercept - dot(&w, &self.scaler.means);
        (w, b)
    }
}
