use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use crate::av::AvFeatureSet;
use crate::error::{Error, Result};
use crate::fusion::{FeatureBlocks, Modality};
use crate::matrix::Matrix;
use crate::model::{Dataset, Dim, PadTriple, ParticipantId, VideoId};
use crate::text::{self, TextResources};

/// Records which sample rows model fitting and prediction have read.
#[derive(Debug, Clone, Default)]
pub struct AccessLog(Arc<Mutex<BTreeSet<usize>>>);

impl AccessLog {
    pub fn touched(&self) -> BTreeSet<usize> {
        self.0.lock().unwrap().clone()
    }

    pub fn clear(&self) {
        self.0.lock().unwrap().clear();
    }

    fn record(&self, rows: &[usize]) {
        self.0.lock().unwrap().extend(rows.iter().copied());
    }
}

/// Evaluation-ready samples: one row per response with its group labels, targets
/// and per-modality features.
#[derive(Debug, Clone)]
pub struct SampleSet {
    participants: Vec<ParticipantId>,
    videos: Vec<VideoId>,
    targets: Vec<PadTriple>,
    features: Option<FeatureBlocks>,
    log: Option<AccessLog>,
}

impl SampleSet {
    pub fn new(
        participants: Vec<ParticipantId>,
        videos: Vec<VideoId>,
        targets: Vec<PadTriple>,
        features: Option<FeatureBlocks>,
    ) -> Result<Self> {
        let n = participants.len();
        if videos.len() != n || targets.len() != n {
            return Err(Error::invalid(
                "participants, videos and targets must have one entry per sample",
            ));
        }
        if let Some(f) = &features {
            if f.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: f.rows(),
                    context: "feature rows".into(),
                });
            }
        }
        Ok(SampleSet {
            participants,
            videos,
            targets,
            features,
            log: None,
        })
    }

    /// Builds samples from a dataset. With `text`, every response must carry a
    /// memory (use the memory subset); its most intense memory is featurized.
    /// With `av`, every video must have audiovisual features.
    pub fn build(
        ds: &Dataset,
        text: Option<&TextResources>,
        av: Option<&AvFeatureSet>,
    ) -> Result<Self> {
        use rayon::prelude::*;
        let responses = ds.responses();
        let mut blocks = BTreeMap::new();
        if let Some(res) = text {
            let feats = responses
                .par_iter()
                .map(|r| {
                    let m = r.selected_memory().ok_or_else(|| {
                        Error::invalid(format!(
                            "response of participant {} to video {} has no memory; \
                             memory features need the memory subset",
                            r.participant_id, r.video_id
                        ))
                    })?;
                    text::extract(&m.text, res)
                })
                .collect::<Result<Vec<_>>>()?;
            let lex: Vec<&[f64]> = feats.iter().map(|f| f.lexical.as_slice()).collect();
            let emb: Vec<&[f64]> = feats.iter().map(|f| f.embedding.as_slice()).collect();
            blocks.insert(Modality::MemLexical, Matrix::from_rows(&lex)?);
            blocks.insert(Modality::MemEmbedding, Matrix::from_rows(&emb)?);
        }
        if let Some(av) = av {
            let mut audio = Vec::with_capacity(responses.len());
            let mut visual = Vec::with_capacity(responses.len());
            for r in responses {
                let (Some(a), Some(v)) = (av.audio(&r.video_id), av.visual(&r.video_id)) else {
                    return Err(Error::invalid(format!(
                        "no audiovisual features for video {}",
                        r.video_id
                    )));
                };
                audio.push(a);
                visual.push(v);
            }
            blocks.insert(Modality::Audio, Matrix::from_rows(&audio)?);
            blocks.insert(Modality::Visual, Matrix::from_rows(&visual)?);
        }
        let features = if blocks.is_empty() || responses.is_empty() {
            None
        } else {
            Some(FeatureBlocks::new(blocks)?)
        };
        SampleSet::new(
            responses.iter().map(|r| r.participant_id.clone()).collect(),
            responses.iter().map(|r| r.video_id.clone()).collect(),
            responses.iter().map(|r| r.induced).collect(),
            features,
        )
    }

    /// Starts recording feature and target reads.
    pub fn with_access_log(mut self) -> (Self, AccessLog) {
        let log = AccessLog::default();
        self.log = Some(log.clone());
        (self, log)
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn participants(&self) -> &[ParticipantId] {
        &self.participants
    }

    pub fn videos(&self) -> &[VideoId] {
        &self.videos
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.features.as_ref().map_or(Vec::new(), |f| f.modalities())
    }

    fn touch(&self, rows: &[usize]) {
        if let Some(log) = &self.log {
            log.record(rows);
        }
    }

    pub fn targets(&self, rows: &[usize], dim: Dim) -> Vec<f64> {
        self.touch(rows);
        rows.iter().map(|&i| self.targets[i].get(dim)).collect()
    }

    pub fn features(&self, rows: &[usize], mods: &[Modality]) -> Result<FeatureBlocks> {
        self.touch(rows);
        let f = self
            .features
            .as_ref()
            .ok_or_else(|| Error::invalid("samples carry no features"))?;
        f.restrict(mods).map(|b| b.select_rows(rows))
    }

    pub fn groups(&self, rows: &[usize]) -> Vec<ParticipantId> {
        rows.iter().map(|&i| self.participants[i].clone()).collect()
    }

    pub fn videos_of(&self, rows: &[usize]) -> Vec<VideoId> {
        rows.iter().map(|&i| self.videos[i].clone()).collect()
    }
}
