use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::r2_score;
use super::samples::SampleSet;
use crate::cv::make_lpo_folds;
use crate::error::{Error, Result};
use crate::fusion::{FusionSpec, LateParams, Modality, Stacking, Strategy};
use crate::model::Dim;
use crate::regress::{ForestParams, SvrParams};
use crate::seed;

/// Hyperparameter lists searched per model role. The SVR lists apply to the
/// early-fusion SVR and to both late-fusion SVR base models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub svr_c: Vec<f64>,
    pub svr_epsilon: Vec<f64>,
    /// `null` selects the 1/(n_features·variance) heuristic.
    pub svr_gamma: Vec<Option<f64>>,
    pub forest_n_trees: Vec<usize>,
    pub forest_min_leaf: Vec<usize>,
    pub forest_max_features: Vec<f64>,
    pub ridge_alpha: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            svr_c: vec![0.1, 1.0, 10.0],
            svr_epsilon: vec![0.1],
            svr_gamma: vec![None],
            forest_n_trees: vec![100],
            forest_min_leaf: vec![2],
            forest_max_features: vec![1.0 / 3.0],
            ridge_alpha: vec![1.0],
        }
    }
}

impl Grid {
    /// One value per list.
    pub fn single(svr: SvrParams, forest: ForestParams, ridge_alpha: f64) -> Self {
        Grid {
            svr_c: vec![svr.c],
            svr_epsilon: vec![svr.epsilon],
            svr_gamma: vec![svr.gamma],
            forest_n_trees: vec![forest.n_trees],
            forest_min_leaf: vec![forest.min_leaf],
            forest_max_features: vec![forest.max_features],
            ridge_alpha: vec![ridge_alpha],
        }
    }

    fn validate(&self) -> Result<()> {
        let lens = [
            ("svr_c", self.svr_c.len()),
            ("svr_epsilon", self.svr_epsilon.len()),
            ("svr_gamma", self.svr_gamma.len()),
            ("forest_n_trees", self.forest_n_trees.len()),
            ("forest_min_leaf", self.forest_min_leaf.len()),
            ("forest_max_features", self.forest_max_features.len()),
            ("ridge_alpha", self.ridge_alpha.len()),
        ];
        if let Some((name, _)) = lens.iter().find(|(_, l)| *l == 0) {
            return Err(Error::Config(format!("grid list {name} is empty")));
        }
        Ok(())
    }

    /// All points relevant to `strategy` over `modalities`, sorted by key.
    pub fn points(&self, strategy: Strategy, modalities: &[Modality]) -> Result<Vec<HyperPoint>> {
        self.validate()?;
        let has_svr = strategy == Strategy::Early
            || modalities.iter().any(|m| Modality::AV.contains(m));
        let has_forest =
            strategy == Strategy::Late && modalities.iter().any(|m| Modality::MEMORY.contains(m));
        let has_ridge = strategy == Strategy::Late;

        let mut points = vec![BTreeMap::new()];
        let mut expand = |name: &str, values: Vec<f64>| {
            points = points
                .iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q: BTreeMap<String, f64> = p.clone();
                        q.insert(name.to_string(), *v);
                        q
                    })
                })
                .collect();
        };
        if has_svr {
            expand("svr.c", self.svr_c.clone());
            expand("svr.epsilon", self.svr_epsilon.clone());
            expand(
                "svr.gamma",
                self.svr_gamma.iter().map(|g| g.unwrap_or(0.0)).collect(),
            );
        }
        if has_forest {
            expand(
                "forest.n_trees",
                self.forest_n_trees.iter().map(|&v| v as f64).collect(),
            );
            expand(
                "forest.min_leaf",
                self.forest_min_leaf.iter().map(|&v| v as f64).collect(),
            );
            expand("forest.max_features", self.forest_max_features.clone());
        }
        if has_ridge {
            expand("ridge.alpha", self.ridge_alpha.clone());
        }
        let mut points: Vec<HyperPoint> = points.into_iter().map(HyperPoint).collect();
        points.sort_by(|a, b| a.cmp_key(b));
        points.dedup();
        Ok(points)
    }
}

/// Settings that are not searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedParams {
    pub svr: SvrParams,
    pub forest: ForestParams,
    pub k_inner: usize,
    pub stacking: Stacking,
}

impl Default for FixedParams {
    fn default() -> Self {
        FixedParams {
            svr: SvrParams::default(),
            forest: ForestParams::default(),
            k_inner: 4,
            stacking: Stacking::OutOfFold,
        }
    }
}

/// One grid point: parameter name → value (`svr.gamma = 0` means the heuristic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperPoint(pub BTreeMap<String, f64>);

impl HyperPoint {
    /// Lexicographic order of the value tuple (names in sorted order).
    fn cmp_key(&self, other: &HyperPoint) -> std::cmp::Ordering {
        let a = self.0.iter().map(|(k, v)| (k.as_str(), *v));
        let b = other.0.iter().map(|(k, v)| (k.as_str(), *v));
        a.zip(b)
            .map(|((ka, va), (kb, vb))| ka.cmp(kb).then(va.total_cmp(&vb)))
            .find(|o| o.is_ne())
            .unwrap_or(self.0.len().cmp(&other.0.len()))
    }

    fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn to_spec(&self, strategy: Strategy, fixed: &FixedParams) -> FusionSpec {
        let mut svr = fixed.svr;
        if let Some(c) = self.get("svr.c") {
            svr.c = c;
        }
        if let Some(e) = self.get("svr.epsilon") {
            svr.epsilon = e;
        }
        if let Some(g) = self.get("svr.gamma") {
            svr.gamma = (g > 0.0).then_some(g);
        }
        let mut forest = fixed.forest;
        if let Some(v) = self.get("forest.n_trees") {
            forest.n_trees = v as usize;
        }
        if let Some(v) = self.get("forest.min_leaf") {
            forest.min_leaf = v as usize;
        }
        if let Some(v) = self.get("forest.max_features") {
            forest.max_features = v;
        }
        match strategy {
            Strategy::Early => FusionSpec::Early(svr),
            Strategy::Late => FusionSpec::Late(LateParams {
                audio: svr,
                visual: svr,
                memory: forest,
                meta_alpha: self.get("ridge.alpha").unwrap_or(1.0),
                k_inner: fixed.k_inner,
                stacking: fixed.stacking,
            }),
        }
    }
}

/// What a grid search is tuning.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub strategy: Strategy,
    pub modalities: Vec<Modality>,
    pub dim: Dim,
    pub fixed: FixedParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: HyperPoint,
    /// Mean inner-fold R² of the best point; `None` when the grid had one point.
    pub score: Option<f64>,
}

/// Participant-grouped inner splits of `rows` (indices into the sample set).
pub fn inner_splits(
    samples: &SampleSet,
    rows: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let groups = samples.groups(rows);
    let plan = make_lpo_folds(&groups, k, seed)?;
    (0..k)
        .map(|f| {
            let (tr, va) = plan.split(&groups, f)?;
            Ok((
                tr.into_iter().map(|i| rows[i]).collect(),
                va.into_iter().map(|i| rows[i]).collect(),
            ))
        })
        .collect()
}

/// Fits `spec` on `train` rows and returns predictions for `test` rows.
pub(crate) fn fit_predict(
    samples: &SampleSet,
    pipeline: &Pipeline,
    spec: &FusionSpec,
    train: &[usize],
    test: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let x = samples.features(train, &pipeline.modalities)?;
    let y = samples.targets(train, pipeline.dim);
    let model = spec.fit(&x, &y, &samples.groups(train), seed)?;
    model.predict(&samples.features(test, &pipeline.modalities)?)
}

/// Exhaustive search scored by mean R² over the given inner splits. Ties go to
/// the lexicographically smallest point. A single-point grid is returned without
/// evaluation.
pub fn grid_search(
    samples: &SampleSet,
    splits: &[(Vec<usize>, Vec<usize>)],
    grid: &Grid,
    pipeline: &Pipeline,
    seed: u64,
) -> Result<GridResult> {
    let points = grid.points(pipeline.strategy, &pipeline.modalities)?;
    if points.len() == 1 {
        return Ok(GridResult {
            best: points.into_iter().next().unwrap(),
            score: None,
        });
    }
    if splits.is_empty() {
        return Err(Error::invalid("grid search needs at least one inner split"));
    }
    let scores = points
        .par_iter()
        .map(|p| {
            let spec = p.to_spec(pipeline.strategy, &pipeline.fixed);
            let mut total = 0.0;
            for (k, (train, val)) in splits.iter().enumerate() {
                let pred = fit_predict(
                    samples,
                    pipeline,
                    &spec,
                    train,
                    val,
                    seed::derive_index(seed, k as u64),
                )?;
                total += r2_score(&samples.targets(val, pipeline.dim), &pred)?;
            }
            Ok(total / splits.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    // points are sorted, so the first maximum is the lexicographically smallest
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(GridResult {
        best: points[best].clone(),
        score: Some(scores[best]),
    })
}
