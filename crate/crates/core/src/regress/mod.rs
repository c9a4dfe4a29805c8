//! Regression kernels: epsilon-SVR (RBF), random forest, ridge, and the feature
//! scaler each model carries so standardization is always fitted on training
//! data only.

mod forest;
mod ridge;
mod scaler;
mod svr;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use forest::{fit_forest, ForestModel, ForestParams, Node, Tree};
pub use ridge::{fit_ridge, RidgeModel};
pub use scaler::Scaler;
pub use svr::{fit_svr, kernel_matrix, rbf_kernel, scale_gamma, SvrModel, SvrParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Version of the serialized model document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A model family with its hyperparameters, ready to fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Svr(SvrParams),
    Forest(ForestParams),
    Ridge { alpha: f64 },
}

impl ModelSpec {
    pub fn fit(&self, x: &Matrix, y: &[f64]) -> Result<Model> {
        Ok(match self {
            ModelSpec::Svr(p) => Model::Svr(fit_svr(x, y, p)?),
            ModelSpec::Forest(p) => Model::Forest(fit_forest(x, y, p)?),
            ModelSpec::Ridge { alpha } => Model::Ridge(fit_ridge(x, y, *alpha)?),
        })
    }

    /// Same spec with any random seed replaced.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ModelSpec::Forest(p) => ModelSpec::Forest(ForestParams { seed, ..p }),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Svr(SvrModel),
    Forest(ForestModel),
    Ridge(RidgeModel),
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: Model,
}

impl Model {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::Svr(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
            Model::Ridge(m) => m.predict(x),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Svr(m) => m.n_features(),
            Model::Forest(m) => m.n_features,
            Model::Ridge(m) => m.n_features(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Model> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        match v.get("format_version").and_then(|f| f.as_u64()) {
            Some(f) if f == MODEL_FORMAT_VERSION as u64 => {}
            other => {
                return Err(Error::Config(format!(
                    "unsupported model format version {other:?} (expected {MODEL_FORMAT_VERSION})"
                )))
            }
        }
        let doc: ModelDocument = serde_json::from_value(v)?;
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_checked() {
        let m = ModelSpec::Ridge { alpha: 1.0 }
            .fit(&Matrix::from_rows(&[[0.0], [1.0]]).unwrap(), &[0.0, 1.0])
            .unwrap();
        let s = m.to_json().unwrap();
        assert_eq!(Model::from_json(&s).unwrap(), m);
        let bumped = s.replace("\"format_version\":1", "\"format_version\":99");
        assert!(Model::from_json(&bumped).is_err());
    }
}
