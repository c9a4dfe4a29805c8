//! Synthetic datasets with planted effects.
//!
//! Induced affect per dimension is
//! `w_video·latent + w_memory·memory_affect + w_context·ctx + u_participant + noise`,
//! clipped to [−1, 1]. `ctx` is a random linear combination of age, personality
//! and mood, standardized over participants, so it lies in the span of the
//! `De+Pe+Mo` design block. Memory texts are drawn from phrase banks keyed to
//! the memory's PAD octant and intensity, so lexical features carry the signal.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::av::{pool_frames, FrameFeatures, write_rows, AvDims, AvFeatureSet, AvManifest, AvPaths};
use crate::error::{Error, Result};
use crate::model::{
    Dataset, Dim, MemoryRecord, PadTriple, ParticipantId, VideoId, ViewerContext, ViewerResponse,
};
use crate::seed;

/// Effect sizes for one affective dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimWeights {
    pub video: f64,
    pub memory: f64,
    pub context: f64,
    /// Standard deviation of the participant random intercept.
    pub participant_sd: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PadWeights {
    pub p: DimWeights,
    pub a: DimWeights,
    pub d: DimWeights,
}

impl PadWeights {
    pub fn get(&self, dim: Dim) -> &DimWeights {
        match dim {
            Dim::P => &self.p,
            Dim::A => &self.a,
            Dim::D => &self.d,
        }
    }

    pub fn get_mut(&mut self, dim: Dim) -> &mut DimWeights {
        match dim {
            Dim::P => &mut self.p,
            Dim::A => &mut self.a,
            Dim::D => &mut self.d,
        }
    }
}

impl Default for PadWeights {
    fn default() -> Self {
        PadWeights {
            p: DimWeights {
                video: 0.5,
                memory: 0.45,
                context: 0.1,
                participant_sd: 0.1,
                noise_sd: 0.15,
            },
            a: DimWeights {
                video: 0.6,
                memory: 0.15,
                context: 0.1,
                participant_sd: 0.1,
                noise_sd: 0.15,
            },
            d: DimWeights {
                video: 0.4,
                memory: 0.15,
                context: 0.1,
                participant_sd: 0.1,
                noise_sd: 0.15,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_participants: usize,
    pub n_videos: usize,
    pub videos_per_participant: usize,
    /// Probability that a response recalls a memory.
    pub memory_rate: f64,
    /// Probability that a memory-bearing response recalls a second one.
    pub second_memory_rate: f64,
    /// Video latents are uniform on [−spread, spread]³.
    pub video_spread: f64,
    pub weights: PadWeights,
    pub audio_dim: usize,
    pub frame_dim: usize,
    pub n_frames: usize,
    pub av_noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_participants: 260,
            n_videos: 42,
            videos_per_participant: 7,
            memory_rate: 978.0 / 2098.0,
            second_memory_rate: 0.05,
            video_spread: 0.8,
            weights: PadWeights::default(),
            audio_dim: 158,
            frame_dim: 871,
            n_frames: 4,
            av_noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_participants == 0 || self.n_videos == 0 || self.videos_per_participant == 0 {
            return bad("participant, video and per-participant counts must be positive".into());
        }
        if self.videos_per_participant > self.n_videos {
            return bad(format!(
                "videos_per_participant ({}) exceeds n_videos ({})",
                self.videos_per_participant, self.n_videos
            ));
        }
        for (name, r) in [
            ("memory_rate", self.memory_rate),
            ("second_memory_rate", self.second_memory_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} = {r} outside [0, 1]"));
            }
        }
        if self.audio_dim == 0 || self.frame_dim == 0 || self.n_frames == 0 {
            return bad("audiovisual dimensions and frame count must be positive".into());
        }
        if !(self.video_spread.is_finite() && self.video_spread >= 0.0)
            || !(self.av_noise_sd.is_finite() && self.av_noise_sd >= 0.0)
        {
            return bad("video_spread and av_noise_sd must be finite and non-negative".into());
        }
        for dim in Dim::ALL {
            let w = self.weights.get(dim);
            let all = [w.video, w.memory, w.context, w.participant_sd, w.noise_sd];
            if all.iter().any(|v| !v.is_finite()) {
                return bad(format!("non-finite weight for dimension {dim}"));
            }
            if w.participant_sd < 0.0 || w.noise_sd < 0.0 {
                return bad(format!("negative standard deviation for dimension {dim}"));
            }
        }
        Ok(())
    }

    pub fn av_dims(&self) -> AvDims {
        AvDims {
            audio: self.audio_dim,
            frame: self.frame_dim,
        }
    }
}

/// Planted variance components of one dimension (memory-bearing responses).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimTruth {
    pub dim: Dim,
    pub var_video: f64,
    pub var_context: f64,
    pub var_memory: f64,
    pub var_participant: f64,
    pub var_noise: f64,
    /// Planted marginal-R² increments of the Vid, De+Pe+Mo and Ma blocks.
    pub r2m_video: f64,
    pub r2m_context: f64,
    pub r2m_memory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub n_responses: usize,
    pub n_with_memory: usize,
    /// Fraction of induced components that were clipped to ±1.
    pub clipping_rate: f64,
    pub dims: Vec<DimTruth>,
    pub video_latents: BTreeMap<VideoId, [f64; 3]>,
    /// Per-dimension weights of the standardized context features
    /// (age, six HEXACO scores, three mood components).
    pub context_coefs: Vec<[f64; 10]>,
}

impl GroundTruth {
    pub fn dim(&self, dim: Dim) -> &DimTruth {
        self.dims.iter().find(|d| d.dim == dim).expect("all dimensions present")
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub audio: BTreeMap<VideoId, Vec<f64>>,
    pub frames: BTreeMap<VideoId, Vec<Vec<f64>>>,
    pub truth: GroundTruth,
}

impl SynthOutput {
    pub fn av_features(&self) -> Result<AvFeatureSet> {
        let visual = self
            .frames
            .iter()
            .map(|(v, f)| {
                let ff = FrameFeatures::new(v.clone(), f.clone())?;
                Ok((v.clone(), pool_frames(&ff)))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        AvFeatureSet::new(self.truth.spec.av_dims(), self.audio.clone(), visual)
    }
}

const STRONG_POS: &[&str] = &[
    "wonderful", "joyful", "blissful", "amazing", "delighted", "beautiful", "love", "happy", "great",
];
const MILD_POS: &[&str] = &["good", "nice", "pleasant", "content", "cheerful", "peaceful"];
const MILD_NEG: &[&str] = &["gloomy", "uneasy", "unhappy", "sorry", "disappointed", "miss"];
const STRONG_NEG: &[&str] = &[
    "terrible", "horrible", "miserable", "heartbroken", "awful", "sad", "worst",
];
const AROUSAL: [&[&str]; 4] = [
    &["excited", "wild", "frantic", "intense", "electrifying", "explosive"],
    &["lively", "energetic", "alert", "busy", "restless"],
    &["calm", "mellow", "quiet", "slow", "still"],
    &["sleepy", "drowsy", "tranquil", "lethargic", "sluggish"],
];
const DOMINANCE: [&[&str]; 4] = [
    &["powerful", "invincible", "unstoppable", "commanding", "dominant"],
    &["confident", "capable", "independent", "bold", "proud"],
    &["unsure", "hesitant", "timid", "shy", "awkward"],
    &["helpless", "powerless", "trapped", "overwhelmed", "defeated"],
];
const TOPICS: &[&str] = &[
    "beach", "wedding", "concert", "birthday", "christmas", "holiday", "vacation", "party", "trip",
    "school", "college", "camp", "church", "game",
];
const PEOPLE: &[&str] = &[
    "mother", "father", "sister", "brother", "friend", "boyfriend", "girlfriend", "wife",
    "husband", "grandmother", "grandfather", "kid", "dog", "family", "team",
];
const TIMES: &[&str] = &["summer", "winter", "night", "morning", "evening", "weekend", "week", "year"];

/// Tier 0 (strongly positive) … 3 (strongly negative).
fn tier(v: f64) -> usize {
    if v > 0.5 {
        0
    } else if v > 0.0 {
        1
    } else if v > -0.5 {
        2
    } else {
        3
    }
}

/// Phrase-bank text for a memory with the given affect.
pub fn memory_text(affect: &PadTriple, rng: &mut impl Rng) -> String {
    let pleasure = [STRONG_POS, MILD_POS, MILD_NEG, STRONG_NEG][tier(affect.p)];
    let pick = |bank: &[&'static str], rng: &mut dyn rand::RngCore| -> &'static str {
        bank.choose(rng).copied().expect("non-empty bank")
    };
    let p1 = pick(pleasure, rng);
    let p2 = pick(pleasure, rng);
    let a = pick(AROUSAL[tier(affect.a)], rng);
    let d = pick(DOMINANCE[tier(affect.d)], rng);
    let topic = pick(TOPICS, rng);
    let person = pick(PEOPLE, rng);
    let time = pick(TIMES, rng);
    match rng.random_range(0..3) {
        0 => format!(
            "I remember the {topic} with my {person} that {time}. It was {p1} and I felt {p2}, {a} and {d}."
        ),
        1 => format!(
            "This song reminds me of a {time} at the {topic} with my {person}, so {p1}, {a} and {d}."
        ),
        _ => format!(
            "My {person} and I went to a {topic} one {time}; I felt {p1} and {d}, everything was {a} and {p2}."
        ),
    }
}

struct Participant {
    id: ParticipantId,
    context: ViewerContext,
    ctx: [f64; 3],
    intercept: [f64; 3],
}

fn zscore_columns(rows: &mut [[f64; 10]]) {
    for j in 0..10 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = crate::matrix::mean(&col);
        let sd = crate::matrix::variance(&col).sqrt();
        for r in rows.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - m) / sd } else { 0.0 };
        }
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated standard deviation")
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, "synth"));
    let width = spec.n_videos.to_string().len();
    let videos: Vec<VideoId> = (1..=spec.n_videos)
        .map(|i| VideoId::from(format!("v{i:0width$}")))
        .collect();
    let s = spec.video_spread;
    let latents: Vec<[f64; 3]> = videos
        .iter()
        .map(|_| std::array::from_fn(|_| rng.random_range(-s..=s)))
        .collect();

    // participants and their standardized context projections
    let pwidth = spec.n_participants.to_string().len().max(3);
    let genders = ["female", "male"];
    let nations = ["DE", "IN", "UK", "US"];
    let hex: Normal<f64> = Normal::new(3.2, 0.6).expect("valid");
    let contexts: Vec<ViewerContext> = (0..spec.n_participants)
        .map(|_| ViewerContext {
            age: rng.random_range(18..=60),
            gender: genders[rng.random_range(0..genders.len())].into(),
            nationality: nations[rng.random_range(0..nations.len())].into(),
            hexaco: std::array::from_fn(|_| hex.sample(&mut rng).clamp(1.0, 5.0)),
            mood: PadTriple::clipped(
                rng.random_range(-0.6..=0.6),
                rng.random_range(-0.6..=0.6),
                rng.random_range(-0.6..=0.6),
            ),
        })
        .collect();
    let mut feats: Vec<[f64; 10]> = contexts
        .iter()
        .map(|c| {
            let mut f = [0.0; 10];
            f[0] = c.age as f64;
            f[1..7].copy_from_slice(&c.hexaco);
            f[7..10].copy_from_slice(&c.mood.to_array());
            f
        })
        .collect();
    zscore_columns(&mut feats);
    let std_normal = normal(1.0);
    let context_coefs: Vec<[f64; 10]> = (0..3)
        .map(|_| std::array::from_fn(|_| std_normal.sample(&mut rng)))
        .collect();
    let mut ctx: Vec<[f64; 3]> = feats
        .iter()
        .map(|f| std::array::from_fn(|d| crate::matrix::dot(f, &context_coefs[d])))
        .collect();
    for d in 0..3 {
        let col: Vec<f64> = ctx.iter().map(|c| c[d]).collect();
        let (m, sd) = (crate::matrix::mean(&col), crate::matrix::variance(&col).sqrt());
        for c in ctx.iter_mut() {
            c[d] = if sd > 0.0 { (c[d] - m) / sd } else { 0.0 };
        }
    }
    let participants: Vec<Participant> = contexts
        .into_iter()
        .zip(ctx)
        .enumerate()
        .map(|(i, (context, ctx))| Participant {
            id: ParticipantId::from(format!("p{:0pwidth$}", i + 1)),
            context,
            ctx,
            intercept: std::array::from_fn(|d| {
                normal(spec.weights.get(Dim::ALL[d]).participant_sd).sample(&mut rng)
            }),
        })
        .collect();

    // balanced assignment: least-watched videos first, random tie-break
    let mut counts = vec![0usize; spec.n_videos];
    let mut responses = Vec::with_capacity(spec.n_participants * spec.videos_per_participant);
    let mut clipped = 0usize;
    for part in &participants {
        let mut order: Vec<(usize, f64, usize)> = (0..spec.n_videos)
            .map(|v| (counts[v], rng.random::<f64>(), v))
            .collect();
        order.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut chosen: Vec<usize> = order[..spec.videos_per_participant].iter().map(|o| o.2).collect();
        chosen.sort_unstable();
        for v in chosen {
            counts[v] += 1;
            let mut memories = Vec::new();
            if rng.random_bool(spec.memory_rate) {
                let n_mem = 1 + rng.random_bool(spec.second_memory_rate) as usize;
                for _ in 0..n_mem {
                    let affect = PadTriple::clipped(
                        rng.random_range(-1.0..=1.0),
                        rng.random_range(-1.0..=1.0),
                        rng.random_range(-1.0..=1.0),
                    );
                    memories.push(MemoryRecord {
                        text: memory_text(&affect, &mut rng),
                        affect,
                    });
                }
            }
            let ma = crate::model::select_memory(&memories)
                .map(|m| m.affect.to_array())
                .unwrap_or([0.0; 3]);
            let raw: [f64; 3] = std::array::from_fn(|d| {
                let w = spec.weights.get(Dim::ALL[d]);
                w.video * latents[v][d]
                    + w.memory * ma[d]
                    + w.context * part.ctx[d]
                    + part.intercept[d]
                    + normal(w.noise_sd).sample(&mut rng)
            });
            clipped += raw.iter().filter(|x| x.abs() > 1.0).count();
            responses.push(ViewerResponse {
                participant_id: part.id.clone(),
                video_id: videos[v].clone(),
                induced: PadTriple::clipped(raw[0], raw[1], raw[2]),
                memories,
                context: part.context.clone(),
            });
        }
    }
    let n_responses = responses.len();
    let n_with_memory = responses.iter().filter(|r| !r.memories.is_empty()).count();
    let dataset = Dataset::new(responses)?;

    // audiovisual features: the latent through random linear maps plus noise
    let mut av_rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, "synth-av"));
    let a_map: Vec<[f64; 3]> = (0..spec.audio_dim)
        .map(|_| std::array::from_fn(|_| std_normal.sample(&mut av_rng)))
        .collect();
    let f_map: Vec<[f64; 3]> = (0..spec.frame_dim)
        .map(|_| std::array::from_fn(|_| std_normal.sample(&mut av_rng)))
        .collect();
    let av_noise = normal(spec.av_noise_sd);
    let mut audio = BTreeMap::new();
    let mut frames = BTreeMap::new();
    for (vid, lat) in videos.iter().zip(&latents) {
        let embed = |map: &[[f64; 3]], rng: &mut ChaCha8Rng| -> Vec<f64> {
            map.iter()
                .map(|m| crate::matrix::dot(m, lat) + av_noise.sample(rng))
                .collect()
        };
        audio.insert(vid.clone(), embed(&a_map, &mut av_rng));
        let fr: Vec<Vec<f64>> = (0..spec.n_frames).map(|_| embed(&f_map, &mut av_rng)).collect();
        frames.insert(vid.clone(), fr);
    }

    let var_video_lat: Vec<f64> = (0..3)
        .map(|d| crate::matrix::variance(&latents.iter().map(|l| l[d]).collect::<Vec<_>>()))
        .collect();
    let dims = Dim::ALL
        .iter()
        .enumerate()
        .map(|(d, &dim)| {
            let w = spec.weights.get(dim);
            let var_video = w.video.powi(2) * var_video_lat[d];
            let var_context = w.context.powi(2);
            // memory affect is uniform on [−1, 1]
            let var_memory = w.memory.powi(2) / 3.0;
            let var_participant = w.participant_sd.powi(2);
            let var_noise = w.noise_sd.powi(2);
            let total = var_video + var_context + var_memory + var_participant + var_noise;
            let frac = |v: f64| if total > 0.0 { v / total } else { 0.0 };
            DimTruth {
                dim,
                var_video,
                var_context,
                var_memory,
                var_participant,
                var_noise,
                r2m_video: frac(var_video),
                r2m_context: frac(var_context),
                r2m_memory: frac(var_memory),
            }
        })
        .collect();

    Ok(SynthOutput {
        dataset,
        audio,
        frames,
        truth: GroundTruth {
            spec: spec.clone(),
            n_responses,
            n_with_memory,
            clipping_rate: clipped as f64 / (3 * n_responses) as f64,
            dims,
            video_latents: videos.into_iter().zip(latents).collect(),
            context_coefs,
        },
    })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPaths {
    pub dataset: PathBuf,
    pub av_manifest: PathBuf,
    pub ground_truth: PathBuf,
}

/// Writes `dataset.json`, `av/manifest.json` with per-video CSVs, and
/// `ground_truth.json` under `dir`.
pub fn write_outputs(out: &SynthOutput, dir: &Path) -> Result<SynthPaths> {
    let av_dir = dir.join("av");
    std::fs::create_dir_all(&av_dir).map_err(|e| Error::io(&av_dir, e))?;
    let dataset = dir.join("dataset.json");
    out.dataset.save(&dataset)?;
    let mut manifest = AvManifest::default();
    for (vid, a) in &out.audio {
        let audio_path = PathBuf::from(format!("{vid}_audio.csv"));
        let frames_path = PathBuf::from(format!("{vid}_frames.csv"));
        write_rows(&av_dir.join(&audio_path), std::slice::from_ref(a))?;
        write_rows(&av_dir.join(&frames_path), &out.frames[vid])?;
        manifest.videos.insert(
            vid.clone(),
            AvPaths {
                audio_path,
                frames_path,
            },
        );
    }
    let av_manifest = av_dir.join("manifest.json");
    manifest.save(&av_manifest)?;
    let ground_truth = dir.join("ground_truth.json");
    let text = serde_json::to_string_pretty(&out.truth)? + "\n";
    std::fs::write(&ground_truth, text).map_err(|e| Error::io(&ground_truth, e))?;
    Ok(SynthPaths {
        dataset,
        av_manifest,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiers() {
        assert_eq!(tier(0.9), 0);
        assert_eq!(tier(0.5), 1);
        assert_eq!(tier(0.0), 2);
        assert_eq!(tier(-0.7), 3);
    }

    #[test]
    fn infeasible_spec() {
        let spec = SynthSpec {
            videos_per_participant: 43,
            ..Default::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn default_shape() {
        let out = generate(&SynthSpec::default()).unwrap();
        assert_eq!(out.dataset.len(), 1820);
        assert_eq!(out.dataset.videos().len(), 42);
        let frac = out.truth.n_with_memory as f64 / 1820.0;
        assert!((frac - 978.0 / 2098.0).abs() < 0.05, "{frac}");
        assert!(out.truth.clipping_rate < 0.05, "{}", out.truth.clipping_rate);
    }
}
