//! Rule-based document valence scoring in the style of VADER.
//!
//! Implemented rules: booster/dampener words in a three-word left window, negation in
//! the same window, `!` emphasis and ALL-CAPS emphasis. Exact parity with any
//! third-party implementation is not a goal.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lemmatize::lemmatize;
use super::lexicon::Lexicon;
use super::tokenize::{tokenize, Token};
use crate::error::{Error, Result};

pub const BOOST_INCREMENT: f64 = 0.293;
pub const NEGATION_SCALAR: f64 = -0.74;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 3;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const NORMALIZATION_ALPHA: f64 = 15.0;
const WINDOW: usize = 3;
/// Damping of booster effects by distance (1, 2 and 3 words to the left).
const BOOST_DAMPING: [f64; 3] = [1.0, 0.95, 0.9];

const BOOSTERS: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerably", "deeply",
    "enormously", "entirely", "especially", "exceptionally", "extremely", "fabulously",
    "greatly", "highly", "hugely", "incredibly", "intensely", "majorly", "more", "most",
    "particularly", "purely", "quite", "really", "remarkably", "so", "substantially",
    "thoroughly", "totally", "tremendously", "truly", "unbelievably", "utterly", "very",
];

const DAMPENERS: &[&str] = &[
    "almost", "barely", "hardly", "less", "little", "marginally", "occasionally", "partly",
    "scarcely", "slightly", "somewhat", "sort",
];

const NEGATIONS: &[&str] = &[
    "not", "never", "no", "cannot", "nothing", "nobody", "none", "neither", "nor", "nowhere",
    "without", "rarely", "seldom", "despite",
];

/// (negative, neutral, positive, compound)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub fn to_array(self) -> [f64; 4] {
        [self.negative, self.neutral, self.positive, self.compound]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleScorer {
    pub name: String,
    valence: HashMap<String, f64>,
}

impl RuleScorer {
    pub const DIMS: [&'static str; 4] = ["negative", "neutral", "positive", "compound"];

    pub fn new(name: impl Into<String>, valence: HashMap<String, f64>) -> Result<Self> {
        let name = name.into();
        for (w, v) in &valence {
            if !v.is_finite() || !(-4.0..=4.0).contains(v) {
                return Err(Error::invalid(format!(
                    "rule scorer {name}: valence for {w:?} = {v} outside [-4, 4]"
                )));
            }
        }
        let valence = valence
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        Ok(RuleScorer { name, valence })
    }

    /// Builds a scorer from a one-dimensional lexicon (`word<TAB>valence`).
    pub fn from_lexicon(lex: &Lexicon) -> Result<Self> {
        if lex.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: lex.dim(),
                context: format!("rule scorer lexicon {}", lex.name),
            });
        }
        let valence = lex
            .iter()
            .map(|(w, v)| (w.to_string(), v[0]))
            .collect();
        RuleScorer::new(lex.name.clone(), valence)
    }

    pub fn load(name: &str, path: &Path) -> Result<Self> {
        RuleScorer::from_lexicon(&Lexicon::load(name, path)?)
    }

    fn lookup(&self, word: &str) -> Option<f64> {
        self.valence
            .get(word)
            .or_else(|| self.valence.get(&lemmatize(word)))
            .copied()
    }
}

fn booster_scalar(word: &str) -> Option<f64> {
    if BOOSTERS.contains(&word) {
        Some(BOOST_INCREMENT)
    } else if DAMPENERS.contains(&word) {
        Some(-BOOST_INCREMENT)
    } else {
        None
    }
}

fn is_negation(word: &str) -> bool {
    NEGATIONS.contains(&word) || word.ends_with("n't")
}

/// Scores a whole document. Empty input yields (0, 1, 0, 0).
pub fn rule_sentiment(text: &str, scorer: &RuleScorer) -> SentimentScores {
    let tokens = tokenize(text);
    let words: Vec<(usize, &Token)> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_word)
        .collect();
    let any_caps = words.iter().any(|(_, t)| t.is_all_caps());
    let any_not_caps = words.iter().any(|(_, t)| !t.is_all_caps());
    let mixed_case = any_caps && any_not_caps;

    // valence per word position (index into `words`)
    let mut valences = vec![0.0_f64; words.len()];
    for (wi, (_, tok)) in words.iter().enumerate() {
        if booster_scalar(&tok.norm).is_some() {
            continue;
        }
        let Some(mut v) = scorer.lookup(&tok.norm) else {
            continue;
        };
        if v == 0.0 {
            continue;
        }
        if mixed_case && tok.is_all_caps() {
            v += CAPS_INCREMENT * v.signum();
        }
        for dist in 1..=WINDOW.min(wi) {
            let prev = &words[wi - dist].1;
            if let Some(scalar) = booster_scalar(&prev.norm) {
                let mut s = scalar * v.signum();
                if mixed_case && prev.is_all_caps() {
                    s += CAPS_INCREMENT * v.signum();
                }
                v += s * BOOST_DAMPING[dist - 1];
            }
        }
        if (1..=WINDOW.min(wi)).any(|dist| is_negation(&words[wi - dist].1.norm)) {
            v *= NEGATION_SCALAR;
        }
        valences[wi] = v;
    }

    // `!` amplifies the closest preceding sentiment-bearing word in the same sentence.
    let mut bangs = vec![0usize; words.len()];
    let mut last_sentiment: Option<usize> = None;
    let mut word_pos = 0;
    for tok in &tokens {
        if tok.is_word {
            if valences[word_pos] != 0.0 {
                last_sentiment = Some(word_pos);
            }
            word_pos += 1;
        } else if tok.norm == "!" {
            if let Some(k) = last_sentiment {
                bangs[k] = (bangs[k] + 1).min(MAX_EXCLAMATIONS);
            }
        } else if matches!(tok.norm.as_str(), "." | "?" | ";") {
            last_sentiment = None;
        }
    }
    for (v, n) in valences.iter_mut().zip(&bangs) {
        *v += v.signum() * EXCLAMATION_INCREMENT * *n as f64;
    }

    let sum: f64 = valences.iter().sum();
    let compound = if sum == 0.0 {
        0.0
    } else {
        (sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()).clamp(-1.0, 1.0)
    };

    let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0.0);
    for &v in &valences {
        if v > 0.0 {
            pos += v + 1.0;
        } else if v < 0.0 {
            neg += v - 1.0;
        } else {
            neu += 1.0;
        }
    }
    let total = pos + neg.abs() + neu;
    if total == 0.0 {
        return SentimentScores {
            negative: 0.0,
            neutral: 1.0,
            positive: 0.0,
            compound: 0.0,
        };
    }
    SentimentScores {
        negative: neg.abs() / total,
        neutral: neu / total,
        positive: pos / total,
        compound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scorer() -> RuleScorer {
        RuleScorer::new(
            "toy",
            [("good", 1.9), ("bad", -2.5), ("happy", 2.7)]
                .into_iter()
                .map(|(w, v)| (w.to_string(), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_is_neutral() {
        let s = rule_sentiment("", &scorer());
        assert_eq!(s.to_array(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn negation_hand_value() {
        let s = rule_sentiment("not good", &scorer());
        let v: f64 = 1.9 * -0.74;
        assert!((v - -1.406).abs() < 1e-12);
        let expected = v / (v * v + 15.0).sqrt();
        assert_eq!(s.compound, expected);
        assert!((s.compound - -0.341).abs() < 5e-4);
    }

    #[test]
    fn exclamation_raises_compound() {
        let plain = rule_sentiment("good", &scorer()).compound;
        let bang = rule_sentiment("good!!", &scorer()).compound;
        assert!(bang > plain);
        let four = rule_sentiment("good!!!!", &scorer()).compound;
        let three = rule_sentiment("good!!!", &scorer()).compound;
        assert_eq!(four, three);
    }

    #[test]
    fn booster_and_caps() {
        let s = scorer();
        let base = rule_sentiment("a good day", &s).compound;
        assert!(rule_sentiment("a very good day", &s).compound > base);
        assert!(rule_sentiment("a slightly good day", &s).compound < base);
        assert!(rule_sentiment("a GOOD day", &s).compound > base);
        // all-caps document: no caps emphasis
        assert_eq!(
            rule_sentiment("GOOD DAY", &s).compound,
            rule_sentiment("good day", &s).compound
        );
    }

    #[test]
    fn proportions_sum_to_one() {
        let s = rule_sentiment("good and bad and happy", &scorer());
        assert!((s.negative + s.neutral + s.positive - 1.0).abs() < 1e-12);
        assert!(s.negative > 0.0 && s.positive > s.negative);
    }

    #[test]
    fn rejects_out_of_range_valence() {
        let m = [("x".to_string(), 5.0)].into_iter().collect();
        assert!(RuleScorer::new("bad", m).is_err());
    }
}
