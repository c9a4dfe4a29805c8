//! Nested leave-persons-out evaluation: participant-grouped outer folds for
//! testing, inner folds for grid search, the AV† video-mean oracle, the two
//! experiment runners and annotator agreement statistics.

mod experiment;
mod grid;
mod metrics;
mod samples;

use serde::{Deserialize, Serialize};

pub use experiment::{
    av_dagger_baseline, nested_splits, render_table, run_experiment, run_experiment1,
    run_experiment2, CellReport, Condition, DeltaReport, ExperimentConfig, ExperimentReport,
    OuterSplit,
};
pub use grid::{grid_search, inner_splits, FixedParams, Grid, GridResult, HyperPoint, Pipeline};
pub use metrics::{pearson, r2_score};
pub use samples::{AccessLog, SampleSet};

pub use crate::cv::{make_lpo_folds, CvPlan};

use crate::error::{Error, Result};
use crate::model::{Dim, PadTriple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub dim: Dim,
    /// pearson(mean of the two annotators, self-reported rating)
    pub correspondence: f64,
    /// pearson(annotator 1, annotator 2)
    pub reliability: f64,
}

/// Per-dimension agreement of two annotators with the self-reported memory affect
/// and with each other.
pub fn annotator_agreement(
    self_ma: &[PadTriple],
    ann1: &[PadTriple],
    ann2: &[PadTriple],
) -> Result<Vec<AgreementRow>> {
    if ann1.len() != self_ma.len() || ann2.len() != self_ma.len() {
        return Err(Error::invalid("annotations must align with self-reports"));
    }
    Dim::ALL
        .into_iter()
        .map(|dim| {
            let s: Vec<f64> = self_ma.iter().map(|t| t.get(dim)).collect();
            let a: Vec<f64> = ann1.iter().map(|t| t.get(dim)).collect();
            let b: Vec<f64> = ann2.iter().map(|t| t.get(dim)).collect();
            let avg: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
            Ok(AgreementRow {
                dim,
                correspondence: pearson(&avg, &s)?,
                reliability: pearson(&a, &b)?,
            })
        })
        .collect()
}
