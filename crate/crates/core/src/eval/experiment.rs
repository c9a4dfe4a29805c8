use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{fit_predict, grid_search, inner_splits, FixedParams, Grid, HyperPoint, Pipeline};
use super::metrics::r2_score;
use super::samples::SampleSet;
use crate::cv::{check_disjoint, make_lpo_folds};
use crate::error::{Error, Result};
use crate::fusion::{Modality, Strategy};
use crate::model::{Dim, VideoId};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Memory descriptions only.
    M,
    /// Audiovisual content only.
    AV,
    /// Audiovisual content and memory descriptions.
    AVM,
    /// Oracle baseline: the video's mean training rating.
    #[serde(rename = "AV†", alias = "AV_dagger", alias = "AVdagger")]
    AVDagger,
}

impl Condition {
    pub fn modalities(self) -> &'static [Modality] {
        match self {
            Condition::M => &Modality::MEMORY,
            Condition::AV => &Modality::AV,
            Condition::AVM => &Modality::ORDER,
            Condition::AVDagger => &[],
        }
    }

    pub fn parse(s: &str) -> Option<Condition> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M" => Some(Condition::M),
            "AV" => Some(Condition::AV),
            "AVM" => Some(Condition::AVM),
            "AV†" | "AV_DAGGER" | "AVDAGGER" | "AV+" => Some(Condition::AVDagger),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::M => "M",
            Condition::AV => "AV",
            Condition::AVM => "AVM",
            Condition::AVDagger => "AV†",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_outer: usize,
    pub k_inner: usize,
    pub grid: Grid,
    pub fixed: FixedParams,
    pub conditions: Vec<Condition>,
    pub strategies: Vec<Strategy>,
    pub dims: Vec<Dim>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k_outer: 5,
            k_inner: 4,
            grid: Grid::default(),
            fixed: FixedParams::default(),
            conditions: vec![Condition::AV, Condition::AVM, Condition::AVDagger],
            strategies: vec![Strategy::Early, Strategy::Late],
            dims: Dim::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub inner: Vec<(Vec<usize>, Vec<usize>)>,
}

/// All outer and inner participant-grouped splits an experiment with this seed
/// uses. Every split is checked for participant overlap.
pub fn nested_splits(
    samples: &SampleSet,
    k_outer: usize,
    k_inner: usize,
    seed: u64,
) -> Result<Vec<OuterSplit>> {
    let groups = samples.participants();
    let plan = make_lpo_folds(groups, k_outer, seed::derive(seed, "outer-folds"))?;
    let inner_seed = seed::derive(seed, "inner-folds");
    (0..k_outer)
        .map(|f| {
            let (train, test) = plan.split(groups, f)?;
            let inner = inner_splits(samples, &train, k_inner, seed::derive_index(inner_seed, f as u64))?;
            for (tr, va) in &inner {
                check_disjoint(groups, tr, va)?;
                check_disjoint(groups, va, &test)?;
            }
            Ok(OuterSplit { train, test, inner })
        })
        .collect()
}

/// Mean training rating of each test row's video; videos absent from training
/// fall back to the global training mean with a warning.
pub fn av_dagger_baseline(
    train_videos: &[VideoId],
    train_y: &[f64],
    test_videos: &[VideoId],
) -> Result<Vec<f64>> {
    if train_videos.len() != train_y.len() || train_y.is_empty() {
        return Err(Error::invalid("AV† baseline needs aligned, non-empty training data"));
    }
    let mut sums: BTreeMap<&VideoId, (f64, usize)> = BTreeMap::new();
    for (v, y) in train_videos.iter().zip(train_y) {
        let e = sums.entry(v).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
    let global = train_y.iter().sum::<f64>() / train_y.len() as f64;
    let mut warned = std::collections::BTreeSet::new();
    Ok(test_videos
        .iter()
        .map(|v| match sums.get(v) {
            Some((s, n)) => s / *n as f64,
            None => {
                if warned.insert(v) {
                    log::warn!("video {v} has no training ratings; AV† uses the global mean");
                }
                global
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dim: Dim,
    pub condition: Condition,
    /// `None` for the AV† oracle, which involves no fusion.
    pub strategy: Option<Strategy>,
    pub mean_r2: f64,
    pub fold_r2: Vec<f64>,
    pub selected: Vec<HyperPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub dim: Dim,
    pub strategy: Strategy,
    pub av: f64,
    pub avm: f64,
    /// AVM − AV mean test R².
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub k_outer: usize,
    pub k_inner: usize,
    pub n_samples: usize,
    pub n_participants: usize,
    pub cells: Vec<CellReport>,
    pub deltas: Vec<DeltaReport>,
}

impl ExperimentReport {
    pub fn cell(&self, dim: Dim, condition: Condition, strategy: Option<Strategy>) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.dim == dim && c.condition == condition && c.strategy == strategy)
    }

    pub fn delta(&self, dim: Dim, strategy: Strategy) -> Option<f64> {
        self.deltas
            .iter()
            .find(|d| d.dim == dim && d.strategy == strategy)
            .map(|d| d.delta)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Task {
    dim: Dim,
    condition: Condition,
    strategy: Option<Strategy>,
    fold: usize,
}

/// Nested leave-persons-out evaluation of every requested
/// (dimension, condition, strategy) cell.
pub fn run_experiment(samples: &SampleSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.conditions.is_empty() || cfg.dims.is_empty() {
        return Err(Error::Config("no conditions or dimensions requested".into()));
    }
    let needs_fusion = cfg.conditions.iter().any(|c| *c != Condition::AVDagger);
    if needs_fusion && cfg.strategies.is_empty() {
        return Err(Error::Config("no fusion strategies requested".into()));
    }
    let available = samples.modalities();
    for c in &cfg.conditions {
        if let Some(m) = c.modalities().iter().find(|m| !available.contains(m)) {
            return Err(Error::Config(format!(
                "condition {c} needs modality {m:?}, which the samples lack"
            )));
        }
    }
    let splits = nested_splits(samples, cfg.k_outer, cfg.k_inner, cfg.seed)?;

    let mut tasks = Vec::new();
    for &dim in &cfg.dims {
        for &condition in &cfg.conditions {
            let strategies: Vec<Option<Strategy>> = if condition == Condition::AVDagger {
                vec![None]
            } else {
                cfg.strategies.iter().map(|s| Some(*s)).collect()
            };
            for strategy in strategies {
                for fold in 0..cfg.k_outer {
                    tasks.push(Task {
                        dim,
                        condition,
                        strategy,
                        fold,
                    });
                }
            }
        }
    }

    let results = tasks
        .par_iter()
        .map(|t| -> Result<(f64, Option<HyperPoint>)> {
            let split = &splits[t.fold];
            let y_test = samples.targets(&split.test, t.dim);
            let Some(strategy) = t.strategy else {
                let pred = av_dagger_baseline(
                    &samples.videos_of(&split.train),
                    &samples.targets(&split.train, t.dim),
                    &samples.videos_of(&split.test),
                )?;
                return Ok((r2_score(&y_test, &pred)?, None));
            };
            let pipeline = Pipeline {
                strategy,
                modalities: t.condition.modalities().to_vec(),
                dim: t.dim,
                fixed: FixedParams {
                    k_inner: cfg.k_inner,
                    ..cfg.fixed
                },
            };
            let label = format!("{}-{}-{}-{}", t.dim, t.condition, strategy.name(), t.fold);
            let task_seed = seed::derive(cfg.seed, &label);
            let best = grid_search(
                samples,
                &split.inner,
                &cfg.grid,
                &pipeline,
                seed::derive(task_seed, "grid"),
            )?;
            let spec = best.best.to_spec(strategy, &pipeline.fixed);
            let pred = fit_predict(
                samples,
                &pipeline,
                &spec,
                &split.train,
                &split.test,
                seed::derive(task_seed, "final"),
            )?;
            Ok((r2_score(&y_test, &pred)?, Some(best.best)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<CellReport> = Vec::new();
    for (t, (r2, point)) in tasks.iter().zip(results) {
        let same = cells.last().is_some_and(|c: &CellReport| {
            c.dim == t.dim && c.condition == t.condition && c.strategy == t.strategy
        });
        if !same {
            cells.push(CellReport {
                dim: t.dim,
                condition: t.condition,
                strategy: t.strategy,
                mean_r2: 0.0,
                fold_r2: Vec::new(),
                selected: Vec::new(),
            });
        }
        let c = cells.last_mut().unwrap();
        c.fold_r2.push(r2);
        c.selected.extend(point);
    }
    for c in &mut cells {
        c.mean_r2 = mean(&c.fold_r2);
    }

    let mut deltas = Vec::new();
    for &dim in &cfg.dims {
        for &s in &cfg.strategies {
            let find = |cond| {
                cells
                    .iter()
                    .find(|c| c.dim == dim && c.condition == cond && c.strategy == Some(s))
                    .map(|c| c.mean_r2)
            };
            if let (Some(av), Some(avm)) = (find(Condition::AV), find(Condition::AVM)) {
                deltas.push(DeltaReport {
                    dim,
                    strategy: s,
                    av,
                    avm,
                    delta: avm - av,
                });
            }
        }
    }

    let mut participants: Vec<_> = samples.participants().to_vec();
    participants.sort();
    participants.dedup();
    Ok(ExperimentReport {
        seed: cfg.seed,
        k_outer: cfg.k_outer,
        k_inner: cfg.k_inner,
        n_samples: samples.len(),
        n_participants: participants.len(),
        cells,
        deltas,
    })
}

/// Memory descriptions as the only input (condition M).
pub fn run_experiment1(samples: &SampleSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(
        samples,
        &ExperimentConfig {
            conditions: vec![Condition::M],
            ..cfg.clone()
        },
    )
}

/// Audiovisual content with and without memory descriptions, plus the AV† oracle.
pub fn run_experiment2(samples: &SampleSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(
        samples,
        &ExperimentConfig {
            conditions: vec![Condition::AV, Condition::AVM, Condition::AVDagger],
            ..cfg.clone()
        },
    )
}

fn signed(v: f64) -> String {
    let s = format!("{v:+.3}");
    // ".059" style as in published tables
    s.replacen("0.", ".", 1)
}

/// Plain-text rendering: one row per dimension and condition, one column per
/// fusion strategy, followed by the AVM − AV deltas.
pub fn render_table(r: &ExperimentReport) -> String {
    let mut out = String::new();
    let mut strategies: Vec<Strategy> = r.cells.iter().filter_map(|c| c.strategy).collect();
    strategies.sort();
    strategies.dedup();
    writeln!(
        out,
        "AvgR² over {} outer folds ({} samples, {} participants, seed {})",
        r.k_outer, r.n_samples, r.n_participants, r.seed
    )
    .unwrap();
    write!(out, "{:<4} {:<5}", "dim", "cond").unwrap();
    for s in &strategies {
        write!(out, " {:>8}", s.name()).unwrap();
    }
    writeln!(out, " {:>8}", "oracle").unwrap();
    let mut rows: Vec<(Dim, Condition)> = r.cells.iter().map(|c| (c.dim, c.condition)).collect();
    rows.dedup();
    for (dim, cond) in rows {
        write!(out, "{:<4} {:<5}", dim.to_string(), cond.to_string()).unwrap();
        for s in &strategies {
            match r.cell(dim, cond, Some(*s)) {
                Some(c) => write!(out, " {:>8.3}", c.mean_r2).unwrap(),
                None => write!(out, " {:>8}", "-").unwrap(),
            }
        }
        match r.cell(dim, cond, None) {
            Some(c) => writeln!(out, " {:>8.3}", c.mean_r2).unwrap(),
            None => writeln!(out, " {:>8}", "-").unwrap(),
        }
    }
    if !r.deltas.is_empty() {
        writeln!(out, "ΔAvgR² (AVM − AV)").unwrap();
        let mut dims: Vec<Dim> = r.deltas.iter().map(|d| d.dim).collect();
        dims.dedup();
        for dim in dims {
            write!(out, "{:<4}", dim.to_string()).unwrap();
            for d in r.deltas.iter().filter(|d| d.dim == dim) {
                write!(out, "  {} {}", d.strategy.name(), signed(d.delta)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dagger_hand_means() {
        let v = |s: &str| VideoId::from(s);
        let pred = av_dagger_baseline(
            &[v("a"), v("a"), v("b")],
            &[0.2, 0.4, -1.0],
            &[v("a"), v("b"), v("c")],
        )
        .unwrap();
        assert!((pred[0] - 0.3).abs() < 1e-15);
        assert_eq!(pred[1], -1.0);
        assert!((pred[2] - (0.2 + 0.4 - 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn signed_format() {
        assert_eq!(signed(0.059), "+.059");
        assert_eq!(signed(-0.0921), "-.092");
    }

    #[test]
    fn condition_names() {
        assert_eq!(Condition::parse("av†"), Some(Condition::AVDagger));
        assert_eq!(
            serde_json::to_string(&Condition::AVDagger).unwrap(),
            "\"AV†\""
        );
        let c: Condition = serde_json::from_str("\"AV_dagger\"").unwrap();
        assert_eq!(c, Condition::AVDagger);
    }
}
