//! Early (feature-level) and late (decision-level, stacked) fusion of the
//! audiovisual and memory modalities.
//!
//! Early fusion concatenates the active modality blocks in a fixed order and fits
//! one SVR. Late fusion fits one base model per source (SVR on audio, SVR on
//! visual, random forest on lexical ++ embedding memory features) and a ridge
//! meta-regressor on their outputs. The meta-regressor is trained on out-of-fold
//! base predictions from participant-grouped inner folds unless naive in-sample
//! stacking is requested.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cv::{check_disjoint, make_lpo_folds};
use crate::error::{Error, Result};
use crate::matrix::{check_targets, Matrix};
use crate::model::{Dim, PadTriple, ParticipantId};
use crate::regress::{
    fit_forest, fit_ridge, fit_svr, ForestParams, Model, RidgeModel, SvrModel, SvrParams,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Audio,
    Visual,
    MemLexical,
    MemEmbedding,
}

impl Modality {
    /// Concatenation order for early fusion.
    pub const ORDER: [Modality; 4] = [
        Modality::Audio,
        Modality::Visual,
        Modality::MemLexical,
        Modality::MemEmbedding,
    ];
    pub const AV: [Modality; 2] = [Modality::Audio, Modality::Visual];
    pub const MEMORY: [Modality; 2] = [Modality::MemLexical, Modality::MemEmbedding];
}

/// Feature vectors of one sample; absent modalities are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModalityBundle {
    pub audio: Option<Vec<f64>>,
    pub visual: Option<Vec<f64>>,
    pub mem_lexical: Option<Vec<f64>>,
    pub mem_embedding: Option<Vec<f64>>,
}

impl ModalityBundle {
    pub fn get(&self, m: Modality) -> Option<&[f64]> {
        match m {
            Modality::Audio => self.audio.as_deref(),
            Modality::Visual => self.visual.as_deref(),
            Modality::MemLexical => self.mem_lexical.as_deref(),
            Modality::MemEmbedding => self.mem_embedding.as_deref(),
        }
    }

    pub fn active(&self) -> Vec<Modality> {
        Modality::ORDER
            .into_iter()
            .filter(|m| self.get(*m).is_some())
            .collect()
    }
}

/// Column layout of a fitted model: modalities in order with their widths.
pub type Layout = Vec<(Modality, usize)>;

/// One matrix per active modality, all with the same rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlocks {
    rows: usize,
    blocks: BTreeMap<Modality, Matrix>,
}

impl FeatureBlocks {
    pub fn new(blocks: BTreeMap<Modality, Matrix>) -> Result<Self> {
        let Some(first) = blocks.values().next() else {
            return Err(Error::invalid("at least one modality must be present"));
        };
        let rows = first.rows();
        for (m, b) in &blocks {
            if b.rows() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: b.rows(),
                    context: format!("rows of modality {m:?}"),
                });
            }
        }
        Ok(FeatureBlocks { rows, blocks })
    }

    /// Stacks per-sample bundles; every bundle must carry the same modalities with
    /// the same widths.
    pub fn from_bundles(bundles: &[ModalityBundle]) -> Result<Self> {
        let Some(first) = bundles.first() else {
            return Err(Error::invalid("no samples"));
        };
        let active = first.active();
        let mut blocks = BTreeMap::new();
        for m in &active {
            let mut rows = Vec::with_capacity(bundles.len());
            for (i, b) in bundles.iter().enumerate() {
                if b.active() != active {
                    return Err(Error::invalid(format!(
                        "sample {} has modalities {:?}, expected {active:?}",
                        i + 1,
                        b.active()
                    )));
                }
                rows.push(b.get(*m).unwrap());
            }
            blocks.insert(*m, Matrix::from_rows(&rows)?);
        }
        FeatureBlocks::new(blocks)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.blocks.keys().copied().collect()
    }

    pub fn has(&self, m: Modality) -> bool {
        self.blocks.contains_key(&m)
    }

    pub fn block(&self, m: Modality) -> Option<&Matrix> {
        self.blocks.get(&m)
    }

    pub fn layout(&self) -> Layout {
        self.blocks.iter().map(|(m, b)| (*m, b.cols())).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureBlocks {
        FeatureBlocks {
            rows: idx.len(),
            blocks: self
                .blocks
                .iter()
                .map(|(m, b)| (*m, b.select_rows(idx)))
                .collect(),
        }
    }

    /// Keeps only `mods` (each must be present).
    pub fn restrict(&self, mods: &[Modality]) -> Result<FeatureBlocks> {
        let mut blocks = BTreeMap::new();
        for m in mods {
            let b = self
                .blocks
                .get(m)
                .ok_or_else(|| Error::invalid(format!("modality {m:?} is not available")))?;
            blocks.insert(*m, b.clone());
        }
        FeatureBlocks::new(blocks)
    }

    /// Concatenates the blocks of `layout`, checking each width.
    fn concat(&self, layout: &Layout) -> Result<Matrix> {
        let mut parts = Vec::with_capacity(layout.len());
        for (m, width) in layout {
            let b = self.blocks.get(m).ok_or_else(|| {
                Error::invalid(format!("modality {m:?} was used at fit time but is missing"))
            })?;
            b.check_cols(*width, &format!("width of modality {m:?}"))?;
            parts.push(b);
        }
        Matrix::hstack(&parts)
    }

    fn check_same_modalities(&self, layout: &Layout) -> Result<()> {
        let fitted: Vec<Modality> = layout.iter().map(|(m, _)| *m).collect();
        if self.modalities() != fitted {
            return Err(Error::invalid(format!(
                "modalities {:?} do not match fit-time modalities {fitted:?}",
                self.modalities()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyFusionModel {
    pub layout: Layout,
    pub svr: SvrModel,
}

pub fn early_fusion_fit(x: &FeatureBlocks, y: &[f64], p: &SvrParams) -> Result<EarlyFusionModel> {
    let layout = x.layout();
    let svr = fit_svr(&x.concat(&layout)?, y, p)?;
    Ok(EarlyFusionModel { layout, svr })
}

impl EarlyFusionModel {
    pub fn predict(&self, x: &FeatureBlocks) -> Result<Vec<f64>> {
        x.check_same_modalities(&self.layout)?;
        self.svr.predict(&x.concat(&self.layout)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseRole {
    Audio,
    Visual,
    Memory,
}

impl BaseRole {
    pub const ALL: [BaseRole; 3] = [BaseRole::Audio, BaseRole::Visual, BaseRole::Memory];

    fn name(self) -> &'static str {
        match self {
            BaseRole::Audio => "audio",
            BaseRole::Visual => "visual",
            BaseRole::Memory => "memory",
        }
    }

    fn layout(self, x: &FeatureBlocks) -> Layout {
        let wanted: &[Modality] = match self {
            BaseRole::Audio => &[Modality::Audio],
            BaseRole::Visual => &[Modality::Visual],
            BaseRole::Memory => &Modality::MEMORY,
        };
        x.layout()
            .into_iter()
            .filter(|(m, _)| wanted.contains(m))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stacking {
    /// Meta-regressor trained on out-of-fold base predictions.
    #[default]
    OutOfFold,
    /// Meta-regressor trained on in-sample base predictions (leaky; for comparison).
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LateParams {
    pub audio: SvrParams,
    pub visual: SvrParams,
    pub memory: ForestParams,
    pub meta_alpha: f64,
    pub k_inner: usize,
    pub stacking: Stacking,
}

impl Default for LateParams {
    fn default() -> Self {
        LateParams {
            audio: SvrParams::default(),
            visual: SvrParams::default(),
            memory: ForestParams::default(),
            meta_alpha: 1.0,
            k_inner: 4,
            stacking: Stacking::OutOfFold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub role: BaseRole,
    pub layout: Layout,
    pub model: Model,
}

impl BaseModel {
    fn predict(&self, x: &FeatureBlocks) -> Result<Vec<f64>> {
        self.model.predict(&x.concat(&self.layout)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateFusionModel {
    pub bases: Vec<BaseModel>,
    /// Ridge over base outputs, in `bases` order.
    pub meta: RidgeModel,
    pub stacking: Stacking,
}

/// Which training rows each stacking fold fitted on and which it predicted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StackingTrace {
    pub folds: Vec<StackFold>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackFold {
    pub train_rows: Vec<usize>,
    pub predicted_rows: Vec<usize>,
}

fn fit_base(
    role: BaseRole,
    layout: &Layout,
    x: &FeatureBlocks,
    y: &[f64],
    p: &LateParams,
    seed: u64,
) -> Result<BaseModel> {
    let m = x.concat(layout)?;
    let model = match role {
        BaseRole::Audio => Model::Svr(fit_svr(&m, y, &p.audio)?),
        BaseRole::Visual => Model::Svr(fit_svr(&m, y, &p.visual)?),
        BaseRole::Memory => {
            let fp = ForestParams {
                seed: seed::derive(seed, "memory-forest"),
                ..p.memory
            };
            Model::Forest(fit_forest(&m, y, &fp)?)
        }
    };
    Ok(BaseModel {
        role,
        layout: layout.clone(),
        model,
    })
}

fn fit_bases(
    roles: &[(BaseRole, Layout)],
    x: &FeatureBlocks,
    y: &[f64],
    p: &LateParams,
    seed: u64,
) -> Result<Vec<BaseModel>> {
    roles
        .iter()
        .map(|(role, layout)| fit_base(*role, layout, x, y, p, seed))
        .collect()
}

fn base_outputs(bases: &[BaseModel], x: &FeatureBlocks) -> Result<Matrix> {
    let cols = bases
        .iter()
        .map(|b| b.predict(x).map(|v| Matrix::column(&v)))
        .collect::<Result<Vec<_>>>()?;
    Matrix::hstack(&cols.iter().collect::<Vec<_>>())
}

/// Fits late fusion. `groups` gives each row's participant for the grouped inner
/// folds; `trace` (if given) records every stacking fold.
pub fn late_fusion_fit(
    x: &FeatureBlocks,
    y: &[f64],
    groups: &[ParticipantId],
    p: &LateParams,
    seed: u64,
    mut trace: Option<&mut StackingTrace>,
) -> Result<LateFusionModel> {
    check_targets(y, x.rows(), "late fusion")?;
    if groups.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: groups.len(),
            context: "late fusion group labels".into(),
        });
    }
    let roles: Vec<(BaseRole, Layout)> = BaseRole::ALL
        .into_iter()
        .map(|r| (r, r.layout(x)))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if roles.is_empty() {
        return Err(Error::invalid("late fusion: no base modality present"));
    }
    let oof = match p.stacking {
        Stacking::Naive => None,
        Stacking::OutOfFold => {
            if x.rows() < 2 * p.k_inner {
                return Err(Error::invalid(format!(
                    "late fusion needs at least {} samples for {} stacking folds, got {}",
                    2 * p.k_inner,
                    p.k_inner,
                    x.rows()
                )));
            }
            let plan = make_lpo_folds(groups, p.k_inner, seed::derive(seed, "stacking-folds"))?;
            let mut oof = Matrix::zeros(x.rows(), roles.len());
            for fold in 0..p.k_inner {
                let (train, held) = plan.split(groups, fold)?;
                check_disjoint(groups, &train, &held)?;
                let xt = x.select_rows(&train);
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let fold_seed = seed::derive_index(seed, fold as u64);
                let bases = fit_bases(&roles, &xt, &yt, p, fold_seed)?;
                let out = base_outputs(&bases, &x.select_rows(&held))?;
                for (r, &i) in held.iter().enumerate() {
                    oof.row_mut(i).copy_from_slice(out.row(r));
                }
                if let Some(t) = trace.as_deref_mut() {
                    t.folds.push(StackFold {
                        train_rows: train,
                        predicted_rows: held,
                    });
                }
            }
            Some(oof)
        }
    };
    let bases = fit_bases(&roles, x, y, p, seed)?;
    let meta_input = match oof {
        Some(m) => m,
        None => base_outputs(&bases, x)?,
    };
    let meta = fit_ridge(&meta_input, y, p.meta_alpha)?;
    Ok(LateFusionModel {
        bases,
        meta,
        stacking: p.stacking,
    })
}

impl LateFusionModel {
    pub fn layout(&self) -> Layout {
        let mut l: Layout = self.bases.iter().flat_map(|b| b.layout.clone()).collect();
        l.sort();
        l
    }

    pub fn predict(&self, x: &FeatureBlocks) -> Result<Vec<f64>> {
        x.check_same_modalities(&self.layout())?;
        self.meta.predict(&base_outputs(&self.bases, x)?)
    }

    /// Meta weights per base role on the raw base-output scale.
    pub fn meta_weights(&self) -> Vec<(BaseRole, f64)> {
        let (w, _) = self.meta.original_coefficients();
        self.bases.iter().map(|b| b.role).zip(w).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Early,
    Late,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Early => "early",
            Strategy::Late => "late",
        }
    }
}

/// A fusion strategy with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum FusionSpec {
    Early(SvrParams),
    Late(LateParams),
}

impl FusionSpec {
    pub fn strategy(&self) -> Strategy {
        match self {
            FusionSpec::Early(_) => Strategy::Early,
            FusionSpec::Late(_) => Strategy::Late,
        }
    }

    pub fn fit(
        &self,
        x: &FeatureBlocks,
        y: &[f64],
        groups: &[ParticipantId],
        seed: u64,
    ) -> Result<FusionModel> {
        Ok(match self {
            FusionSpec::Early(p) => FusionModel::Early(early_fusion_fit(x, y, p)?),
            FusionSpec::Late(p) => FusionModel::Late(late_fusion_fit(x, y, groups, p, seed, None)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FusionModel {
    Early(EarlyFusionModel),
    Late(LateFusionModel),
}

impl FusionModel {
    pub fn predict(&self, x: &FeatureBlocks) -> Result<Vec<f64>> {
        match self {
            FusionModel::Early(m) => m.predict(x),
            FusionModel::Late(m) => m.predict(x),
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            FusionModel::Early(m) => m.layout.clone(),
            FusionModel::Late(m) => m.layout(),
        }
    }
}

/// One independent model per affective dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PadFusionModel {
    pub models: BTreeMap<Dim, FusionModel>,
}

const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BundleManifest {
    format_version: u32,
    dimensions: BTreeMap<Dim, DimEntry>,
}

#[derive(Serialize, Deserialize)]
struct DimEntry {
    strategy: Strategy,
    layout: Layout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stacking: Option<Stacking>,
    components: Vec<Component>,
}

#[derive(Serialize, Deserialize)]
struct Component {
    role: String,
    layout: Layout,
    file: String,
}

pub fn fit_pad(
    x: &FeatureBlocks,
    targets: &[PadTriple],
    groups: &[ParticipantId],
    spec: &FusionSpec,
    seed: u64,
) -> Result<PadFusionModel> {
    use rayon::prelude::*;
    let models = Dim::ALL
        .par_iter()
        .map(|&d| {
            let y: Vec<f64> = targets.iter().map(|t| t.get(d)).collect();
            let m = spec.fit(x, &y, groups, seed::derive(seed, d.name()))?;
            Ok((d, m))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(PadFusionModel { models })
}

impl PadFusionModel {
    pub fn predict(&self, x: &FeatureBlocks) -> Result<BTreeMap<Dim, Vec<f64>>> {
        self.models
            .iter()
            .map(|(d, m)| Ok((*d, m.predict(x)?)))
            .collect()
    }

    /// Writes `manifest.json` plus one versioned JSON file per fitted regressor.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut dimensions = BTreeMap::new();
        for (d, m) in &self.models {
            let mut components = Vec::new();
            let mut write = |role: &str, layout: &Layout, model: Model| -> Result<()> {
                let file = format!("{}_{role}.json", d.name());
                model.save(&dir.join(&file))?;
                components.push(Component {
                    role: role.to_string(),
                    layout: layout.clone(),
                    file,
                });
                Ok(())
            };
            let entry_stacking = match m {
                FusionModel::Early(e) => {
                    write("svr", &e.layout, Model::Svr(e.svr.clone()))?;
                    None
                }
                FusionModel::Late(l) => {
                    for b in &l.bases {
                        write(b.role.name(), &b.layout, b.model.clone())?;
                    }
                    write("meta", &Vec::new(), Model::Ridge(l.meta.clone()))?;
                    Some(l.stacking)
                }
            };
            dimensions.insert(
                *d,
                DimEntry {
                    strategy: match m {
                        FusionModel::Early(_) => Strategy::Early,
                        FusionModel::Late(_) => Strategy::Late,
                    },
                    layout: m.layout(),
                    stacking: entry_stacking,
                    components,
                },
            );
        }
        let manifest = BundleManifest {
            format_version: BUNDLE_FORMAT_VERSION,
            dimensions,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: BundleManifest = serde_json::from_str(&text)?;
        if manifest.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported fusion bundle version {}",
                manifest.format_version
            )));
        }
        let mut models = BTreeMap::new();
        for (d, entry) in manifest.dimensions {
            let mut parts = Vec::new();
            for c in &entry.components {
                parts.push((c.role.as_str(), c.layout.clone(), Model::load(&dir.join(&c.file))?));
            }
            let bad = || Error::Config(format!("malformed fusion bundle entry for {d}"));
            let model = match entry.strategy {
                Strategy::Early => match parts.pop() {
                    Some(("svr", layout, Model::Svr(svr))) if parts.is_empty() => {
                        FusionModel::Early(EarlyFusionModel { layout, svr })
                    }
                    _ => return Err(bad()),
                },
                Strategy::Late => {
                    let Some(("meta", _, Model::Ridge(meta))) = parts.pop() else {
                        return Err(bad());
                    };
                    let bases = parts
                        .into_iter()
                        .map(|(role, layout, model)| {
                            let role = BaseRole::ALL
                                .into_iter()
                                .find(|r| r.name() == role)
                                .ok_or_else(bad)?;
                            Ok(BaseModel {
                                role,
                                layout,
                                model,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    FusionModel::Late(LateFusionModel {
                        bases,
                        meta,
                        stacking: entry.stacking.unwrap_or_default(),
                    })
                }
            };
            models.insert(d, model);
        }
        Ok(PadFusionModel { models })
    }
}
