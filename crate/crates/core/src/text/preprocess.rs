use std::sync::LazyLock;

use regex::{Captures, Regex};

static DECADE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\bthe\s+)?(?:'\d0s\b|\b(?:19|20)\d0'?s\b|\b\d0'?s\b)").unwrap()
});
static YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:19|20)\d{2}\b").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:[.,]\d+)*").unwrap());

/// Whole-word contractions with fixed expansions. Possessive `'s` is deliberately
/// absent: only the listed `'s` forms are expanded.
const FIXED: &[(&str, &str)] = &[
    ("can't", "cannot"),
    ("won't", "will not"),
    ("shan't", "shall not"),
    ("ain't", "is not"),
    ("let's", "let us"),
    ("it's", "it is"),
    ("that's", "that is"),
    ("there's", "there is"),
    ("what's", "what is"),
    ("here's", "here is"),
];

static FIXED_RE: LazyLock<Regex> = LazyLock::new(|| {
    let alts: Vec<String> = FIXED.iter().map(|(c, _)| regex::escape(c)).collect();
    Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|"))).unwrap()
});

static SUFFIX_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b([a-z]+)(n't|'re|'ve|'ll|'d|'m)\b").unwrap());

fn match_case(template: &str, replacement: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut cs = replacement.chars();
        match cs.next() {
            Some(first) => first.to_uppercase().chain(cs).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

fn expand_contractions(text: &str) -> String {
    let fixed = FIXED_RE.replace_all(text, |c: &Captures| {
        let m = &c[0];
        let lower = m.to_lowercase();
        let exp = FIXED
            .iter()
            .find(|(k, _)| *k == lower)
            .map(|(_, v)| *v)
            .unwrap_or(m);
        match_case(m, exp)
    });
    SUFFIX_RE
        .replace_all(&fixed, |c: &Captures| {
            let tail = match c[2].to_lowercase().as_str() {
                "n't" => "not",
                "'re" => "are",
                "'ve" => "have",
                "'ll" => "will",
                "'d" => "would",
                _ => "am",
            };
            format!("{} {tail}", &c[1])
        })
        .into_owned()
}

/// Normalizes a memory description: decades, then years, then remaining numbers,
/// then contractions.
pub fn preprocess(text: &str) -> String {
    let text = text.replace(['\u{2019}', '\u{2018}'], "'");
    let text = DECADE.replace_all(&text, "that decade");
    let text = YEAR.replace_all(&text, "that year");
    let text = NUMBER.replace_all(&text, "0");
    expand_contractions(&text)
}
