//! Precomputed audiovisual content features.
//!
//! Extraction itself happens elsewhere; this module reads the per-video CSV files
//! (no header, one comma-separated vector per line), checks them against the
//! declared dimensions and pools per-frame visual descriptors into one vector.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VideoId;

/// emobase2010 acoustic descriptors.
pub const AUDIO_DIM: usize = 1582;
/// Per-frame visual descriptor blocks: theory-inspired art features, VGG16 FC1
/// activations and adjective-noun-pair detector outputs.
pub const FRAME_BLOCKS: [(&str, usize); 3] = [("art", 271), ("vgg16_fc1", 4096), ("anp", 4342)];
pub const FRAME_DIM: usize = 271 + 4096 + 4342;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvDims {
    pub audio: usize,
    pub frame: usize,
}

impl Default for AvDims {
    fn default() -> Self {
        AvDims {
            audio: AUDIO_DIM,
            frame: FRAME_DIM,
        }
    }
}

impl AvDims {
    pub fn total(&self) -> usize {
        self.audio + self.frame
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatures {
    pub video_id: VideoId,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub video_id: VideoId,
    pub frames: Vec<Vec<f64>>,
}

impl FrameFeatures {
    pub fn new(video_id: VideoId, frames: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::invalid(format!("video {video_id}: no frames")));
        };
        let dim = first.len();
        for (i, f) in frames.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.len(),
                    context: format!("video {video_id}, frame {}", i + 1),
                });
            }
        }
        Ok(FrameFeatures { video_id, frames })
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }
}

/// Reads a header-less numeric CSV, checking every row against `dim`.
fn read_rows(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(&data, &path.display().to_string(), dim)
}

fn parse_rows(data: &str, source: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(data.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            path: source.to_string(),
            line: row,
            message: e.to_string(),
        })?;
        if record.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: record.len(),
                context: format!("{source}, row {row}"),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    path: source.to_string(),
                    line: row,
                    message: format!("column {}: not a number: {field:?}", j + 1),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite {
                        row,
                        column: j + 1,
                        context: source.to_string(),
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(rows)
}

/// Loads the single-row audio vector of one video. `dim` is normally [`AUDIO_DIM`].
pub fn load_audio_features(video_id: VideoId, path: &Path, dim: usize) -> Result<AudioFeatures> {
    let mut rows = read_rows(path, dim)?;
    if rows.len() != 1 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: rows.len().min(2),
            message: format!("expected exactly one audio vector, found {}", rows.len()),
        });
    }
    Ok(AudioFeatures {
        video_id,
        vector: rows.pop().unwrap(),
    })
}

/// Loads one row per extracted frame. `dim` is normally [`FRAME_DIM`].
pub fn load_frame_features(video_id: VideoId, path: &Path, dim: usize) -> Result<FrameFeatures> {
    let rows = read_rows(path, dim)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "no frames".to_string(),
        });
    }
    FrameFeatures::new(video_id, rows)
}

/// Dimension-wise mean over frames.
pub fn pool_frames(f: &FrameFeatures) -> Vec<f64> {
    let n = f.frames.len() as f64;
    let mut out = vec![0.0; f.dim()];
    for frame in &f.frames {
        for (o, x) in out.iter_mut().zip(frame) {
            *o += x;
        }
    }
    for o in &mut out {
        *o /= n;
    }
    out
}

/// Formats rows with the shortest representation that parses back to the same
/// bits, so write → load → write is stable.
pub fn format_rows(rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in rows {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    if let Some(bad) = rows.iter().flatten().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("refusing to write non-finite value {bad}")));
    }
    std::fs::write(path, format_rows(rows)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvPaths {
    pub audio_path: PathBuf,
    pub frames_path: PathBuf,
}

/// Sidecar manifest: video id → feature files, relative to the manifest directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AvManifest {
    pub videos: BTreeMap<VideoId, AvPaths>,
}

impl AvManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Per-video audio vectors and pooled visual vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AvFeatureSet {
    pub dims: AvDims,
    audio: BTreeMap<VideoId, Vec<f64>>,
    visual: BTreeMap<VideoId, Vec<f64>>,
}

impl AvFeatureSet {
    pub fn new(
        dims: AvDims,
        audio: BTreeMap<VideoId, Vec<f64>>,
        visual: BTreeMap<VideoId, Vec<f64>>,
    ) -> Result<Self> {
        for (vid, v) in &audio {
            check_vector(v, dims.audio, &format!("audio features of video {vid}"))?;
        }
        for (vid, v) in &visual {
            check_vector(v, dims.frame, &format!("visual features of video {vid}"))?;
        }
        if audio.keys().ne(visual.keys()) {
            return Err(Error::invalid(
                "audio and visual features cover different videos",
            ));
        }
        Ok(AvFeatureSet {
            dims,
            audio,
            visual,
        })
    }

    /// Loads every video in a sidecar manifest, in parallel.
    pub fn load(manifest_path: &Path, dims: AvDims) -> Result<Self> {
        let manifest = AvManifest::load(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let loaded: Vec<(VideoId, Vec<f64>, Vec<f64>)> = manifest
            .videos
            .par_iter()
            .map(|(vid, paths)| {
                let audio = load_audio_features(vid.clone(), &base.join(&paths.audio_path), dims.audio)?;
                let frames =
                    load_frame_features(vid.clone(), &base.join(&paths.frames_path), dims.frame)?;
                Ok((vid.clone(), audio.vector, pool_frames(&frames)))
            })
            .collect::<Result<_>>()?;
        let mut audio = BTreeMap::new();
        let mut visual = BTreeMap::new();
        for (vid, a, v) in loaded {
            audio.insert(vid.clone(), a);
            visual.insert(vid, v);
        }
        AvFeatureSet::new(dims, audio, visual)
    }

    pub fn len(&self) -> usize {
        self.audio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.audio.is_empty()
    }

    pub fn videos(&self) -> impl Iterator<Item = &VideoId> {
        self.audio.keys()
    }

    pub fn audio(&self, video: &VideoId) -> Option<&[f64]> {
        self.audio.get(video).map(Vec::as_slice)
    }

    pub fn visual(&self, video: &VideoId) -> Option<&[f64]> {
        self.visual.get(video).map(Vec::as_slice)
    }

    /// Audio followed by pooled visual features.
    pub fn vector(&self, video: &VideoId) -> Result<Vec<f64>> {
        match (self.audio(video), self.visual(video)) {
            (Some(a), Some(v)) => Ok([a, v].concat()),
            _ => Err(Error::invalid(format!(
                "no audiovisual features for video {video}"
            ))),
        }
    }
}

fn check_vector(v: &[f64], dim: usize, context: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
            context: context.to_string(),
        });
    }
    if let Some(j) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            row: 1,
            column: j + 1,
            context: context.to_string(),
        });
    }
    Ok(())
}
