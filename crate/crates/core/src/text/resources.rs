use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, Lexicon, RuleScorer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub name: String,
    pub path: PathBuf,
}

/// Declares the lexicon layout (and therefore the lexical vector layout), the
/// rule-scorer lexicon and the embedding tables. Paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceManifest {
    pub lexicons: Vec<ResourceEntry>,
    pub rule_scorer: ResourceEntry,
    pub embeddings: Vec<ResourceEntry>,
}

#[derive(Debug, Clone)]
pub struct TextResources {
    pub lexicons: Vec<Lexicon>,
    pub scorer: RuleScorer,
    pub embeddings: Vec<EmbeddingTable>,
}

macro_rules! bundled_files {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/resources/text/", $file)))),*]
    };
}

static BUNDLED_FILES: &[(&str, &str)] = bundled_files![
    "manifest.json",
    "opinion_lexicon.tsv",
    "sentiwordnet.tsv",
    "nrc_emotion.tsv",
    "sentistrength.tsv",
    "liwc_categories.tsv",
    "afinn.tsv",
    "nrc_hashtag_sentiment.tsv",
    "sentiment140.tsv",
    "effect_wordnet.tsv",
    "nrc_hashtag_emotion.tsv",
    "expanded_emotion.tsv",
    "nrc_affect_intensity.tsv",
    "nrc_vad.tsv",
    "rule_valence.tsv",
    "news_300.txt",
    "wiki_200.txt",
];

fn bundled_file(name: &Path) -> Result<&'static str> {
    BUNDLED_FILES
        .iter()
        .find(|(f, _)| Path::new(f) == name)
        .map(|(_, data)| *data)
        .ok_or_else(|| Error::Config(format!("bundled resource {} missing", name.display())))
}

impl TextResources {
    /// The small sample suite shipped with the crate: 126 lexicon dimensions plus
    /// 4 rule-scorer dimensions (130 total) and 300 + 200 embedding dimensions.
    pub fn bundled() -> &'static TextResources {
        static BUNDLED: OnceLock<TextResources> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            let manifest: ResourceManifest =
                serde_json::from_str(bundled_file(Path::new("manifest.json")).unwrap())
                    .expect("bundled manifest is valid");
            TextResources::from_manifest(&manifest, |entry| {
                Ok(bundled_file(&entry.path)?.to_string())
            })
            .expect("bundled resources are valid")
        })
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: ResourceManifest = serde_json::from_str(&text)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        TextResources::from_manifest(&manifest, |entry| {
            let p = base.join(&entry.path);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        })
    }

    fn from_manifest(
        manifest: &ResourceManifest,
        read: impl Fn(&ResourceEntry) -> Result<String>,
    ) -> Result<Self> {
        let source = |e: &ResourceEntry| e.path.display().to_string();
        let lexicons = manifest
            .lexicons
            .iter()
            .map(|e| Lexicon::from_tsv(&e.name, &source(e), &read(e)?))
            .collect::<Result<Vec<_>>>()?;
        let rs = &manifest.rule_scorer;
        let scorer = RuleScorer::from_lexicon(&Lexicon::from_tsv(&rs.name, &source(rs), &read(rs)?)?)?;
        let embeddings = manifest
            .embeddings
            .iter()
            .map(|e| EmbeddingTable::from_text(&e.name, &source(e), &read(e)?))
            .collect::<Result<Vec<_>>>()?;
        TextResources::new(lexicons, scorer, embeddings)
    }

    pub fn new(
        lexicons: Vec<Lexicon>,
        scorer: RuleScorer,
        embeddings: Vec<EmbeddingTable>,
    ) -> Result<Self> {
        if lexicons.is_empty() {
            return Err(Error::Config("no lexicons loaded".into()));
        }
        if embeddings.is_empty() {
            return Err(Error::Config("no embedding tables loaded".into()));
        }
        Ok(TextResources {
            lexicons,
            scorer,
            embeddings,
        })
    }

    pub fn lexical_dim(&self) -> usize {
        self.lexicons.iter().map(Lexicon::dim).sum::<usize>() + RuleScorer::DIMS.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.iter().map(EmbeddingTable::dim).sum()
    }

    /// Column names of the lexical vector, `lexicon.dimension`.
    pub fn lexical_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .lexicons
            .iter()
            .flat_map(|l| l.dims.iter().map(move |d| format!("{}.{d}", l.name)))
            .collect();
        names.extend(
            RuleScorer::DIMS
                .iter()
                .map(|d| format!("{}.{d}", self.scorer.name)),
        );
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shape() {
        let r = TextResources::bundled();
        assert_eq!(r.lexicons.len(), 13);
        assert_eq!(r.lexical_dim(), 130);
        assert_eq!(r.embedding_dim(), 500);
        assert_eq!(r.lexical_names().len(), 130);
    }

    #[test]
    fn load_from_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("resources/text/manifest.json");
        let r = TextResources::load(&dir).unwrap();
        assert_eq!(r.lexical_dim(), 130);
        assert_eq!(r.embeddings[0].dim(), 300);
        assert_eq!(r.embeddings[1].dim(), 200);
    }
}
