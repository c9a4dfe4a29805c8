//! Domain types shared by every pipeline stage and the on-disk dataset schema.
//!
//! A [`Dataset`] is a list of [`ViewerResponse`]s, one per participant-video event.
//! The participant and video sets are derived from the responses and never stored.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_newtype!(ParticipantId);
id_newtype!(VideoId);

/// One of the three affective dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dim {
    P,
    A,
    D,
}

impl Dim {
    pub const ALL: [Dim; 3] = [Dim::P, Dim::A, Dim::D];

    pub fn name(self) -> &'static str {
        match self {
            Dim::P => "pleasure",
            Dim::A => "arousal",
            Dim::D => "dominance",
        }
    }

    pub fn parse(s: &str) -> Option<Dim> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "pleasure" => Some(Dim::P),
            "a" | "arousal" => Some(Dim::A),
            "d" | "dominance" => Some(Dim::D),
            _ => None,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dim::P => "P",
            Dim::A => "A",
            Dim::D => "D",
        };
        f.write_str(s)
    }
}

/// Pleasure / arousal / dominance rating, each component in [-1, +1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadTriple {
    pub p: f64,
    pub a: f64,
    pub d: f64,
}

impl PadTriple {
    pub const ZERO: PadTriple = PadTriple {
        p: 0.0,
        a: 0.0,
        d: 0.0,
    };

    /// Builds a triple, rejecting components outside [-1, +1] or non-finite.
    pub fn new(p: f64, a: f64, d: f64) -> Result<Self> {
        let t = PadTriple { p, a, d };
        t.validate("pad triple")?;
        Ok(t)
    }

    /// Clamps each component into [-1, +1].
    pub fn clipped(p: f64, a: f64, d: f64) -> Self {
        PadTriple {
            p: p.clamp(-1.0, 1.0),
            a: a.clamp(-1.0, 1.0),
            d: d.clamp(-1.0, 1.0),
        }
    }

    pub fn get(&self, dim: Dim) -> f64 {
        match dim {
            Dim::P => self.p,
            Dim::A => self.a,
            Dim::D => self.d,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p, self.a, self.d]
    }

    /// Euclidean norm of the (p, a, d) vector.
    pub fn intensity(&self) -> f64 {
        (self.p * self.p + self.a * self.a + self.d * self.d).sqrt()
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        for (name, v) in [("p", self.p), ("a", self.a), ("d", self.d)] {
            if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "{what}: component {name} = {v} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerContext {
    pub age: u32,
    pub gender: String,
    pub nationality: String,
    /// Honesty-Humility, Emotionality, eXtraversion, Agreeableness,
    /// Conscientiousness, Openness.
    pub hexaco: [f64; 6],
    pub mood: PadTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub text: String,
    /// Memory-associated affect as rated by the viewer.
    pub affect: PadTriple,
}

impl MemoryRecord {
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerResponse {
    pub participant_id: ParticipantId,
    pub video_id: VideoId,
    pub induced: PadTriple,
    #[serde(default)]
    pub memories: Vec<MemoryRecord>,
    pub context: ViewerContext,
}

impl ViewerResponse {
    /// The memory used for modelling, when the response has any.
    pub fn selected_memory(&self) -> Option<&MemoryRecord> {
        select_memory(&self.memories).ok()
    }

    fn validate(&self, index: usize) -> Result<()> {
        let label = format!(
            "response {index} (participant {}, video {})",
            self.participant_id, self.video_id
        );
        self.induced.validate(&format!("{label}: induced"))?;
        self.context
            .mood
            .validate(&format!("{label}: context.mood"))?;
        if let Some(j) = self.context.hexaco.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "{label}: context.hexaco[{j}] is not finite"
            )));
        }
        for (m, mem) in self.memories.iter().enumerate() {
            mem.affect
                .validate(&format!("{label}: memories[{m}].affect"))?;
        }
        Ok(())
    }
}

/// A validated collection of responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    responses: Vec<ViewerResponse>,
    videos: BTreeSet<VideoId>,
    participants: BTreeSet<ParticipantId>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    responses: Vec<ViewerResponse>,
}

impl Dataset {
    /// Validates ratings and (participant, video) uniqueness.
    pub fn new(responses: Vec<ViewerResponse>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(responses.len());
        for (i, r) in responses.iter().enumerate() {
            r.validate(i)?;
            if !seen.insert((r.participant_id.clone(), r.video_id.clone())) {
                return Err(Error::invalid(format!(
                    "response {i}: duplicate (participant {}, video {})",
                    r.participant_id, r.video_id
                )));
            }
            for (m, mem) in r.memories.iter().enumerate() {
                if mem.word_count() < 3 {
                    log::warn!(
                        "response {i} (participant {}, video {}): memory {m} has fewer than 3 words",
                        r.participant_id,
                        r.video_id
                    );
                }
            }
        }
        let videos = responses.iter().map(|r| r.video_id.clone()).collect();
        let participants = responses
            .iter()
            .map(|r| r.participant_id.clone())
            .collect();
        Ok(Dataset {
            responses,
            videos,
            participants,
        })
    }

    pub fn empty() -> Self {
        Dataset {
            responses: Vec::new(),
            videos: BTreeSet::new(),
            participants: BTreeSet::new(),
        }
    }

    pub fn responses(&self) -> &[ViewerResponse] {
        &self.responses
    }

    pub fn videos(&self) -> &BTreeSet<VideoId> {
        &self.videos
    }

    pub fn participants(&self) -> &BTreeSet<ParticipantId> {
        &self.participants
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: DatasetDoc = serde_json::from_str(s)?;
        Dataset::new(doc.responses)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = DatasetDoc {
            responses: self.responses.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_json_str(&text).map_err(|e| match e {
            Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Picks the memory with the most intense associated affect (Euclidean norm of the
/// PAD vector). Ties go to the earliest record.
pub fn select_memory(memories: &[MemoryRecord]) -> Result<&MemoryRecord> {
    let mut best: Option<&MemoryRecord> = None;
    for m in memories {
        match best {
            Some(b) if m.affect.intensity() <= b.affect.intensity() => {}
            _ => best = Some(m),
        }
    }
    best.ok_or(Error::NoMemories)
}

/// Responses that recalled at least one memory, each reduced to its selected memory.
pub fn memory_subset(ds: &Dataset) -> Dataset {
    let responses: Vec<ViewerResponse> = ds
        .responses
        .iter()
        .filter_map(|r| {
            let chosen = select_memory(&r.memories).ok()?.clone();
            let mut r = r.clone();
            r.memories = vec![chosen];
            Some(r)
        })
        .collect();
    let videos = responses.iter().map(|r| r.video_id.clone()).collect();
    let participants = responses
        .iter()
        .map(|r| r.participant_id.clone())
        .collect();
    Dataset {
        responses,
        videos,
        participants,
    }
}
