//! Rule-based English lemmatizer: an irregular-form table, a list of words that
//! merely look inflected, and suffix rules for plurals, `-ing` and `-ed`.

use std::collections::HashMap;
use std::sync::LazyLock;

const IRREGULAR: &[(&str, &str)] = &[
    ("ran", "run"),
    ("felt", "feel"),
    ("went", "go"),
    ("gone", "go"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("people", "person"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("was", "be"),
    ("were", "be"),
    ("is", "be"),
    ("am", "be"),
    ("are", "be"),
    ("been", "be"),
    ("had", "have"),
    ("has", "have"),
    ("did", "do"),
    ("does", "do"),
    ("done", "do"),
    ("made", "make"),
    ("saw", "see"),
    ("seen", "see"),
    ("took", "take"),
    ("taken", "take"),
    ("got", "get"),
    ("gotten", "get"),
    ("gave", "give"),
    ("given", "give"),
    ("came", "come"),
    ("knew", "know"),
    ("known", "know"),
    ("thought", "think"),
    ("told", "tell"),
    ("said", "say"),
    ("found", "find"),
    ("left", "leave"),
    ("lost", "lose"),
    ("met", "meet"),
    ("brought", "bring"),
    ("bought", "buy"),
    ("sat", "sit"),
    ("stood", "stand"),
    ("heard", "hear"),
    ("held", "hold"),
    ("kept", "keep"),
    ("slept", "sleep"),
    ("won", "win"),
    ("wrote", "write"),
    ("written", "write"),
    ("spoke", "speak"),
    ("broke", "break"),
    ("broken", "break"),
    ("began", "begin"),
    ("begun", "begin"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("sang", "sing"),
    ("sung", "sing"),
    ("swam", "swim"),
    ("flew", "fly"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("died", "die"),
    ("lied", "lie"),
    ("used", "use"),
    ("caused", "cause"),
    ("danced", "dance"),
    ("wives", "wife"),
    ("lives", "life"),
    ("knives", "knife"),
    ("leaves", "leaf"),
];

/// Words ending in an inflection-like suffix that are already lemmas.
const KEEP: &[&str] = &[
    "always", "perhaps", "news", "this", "his", "hers", "its", "ours", "yours", "theirs",
    "yes", "thus", "bus", "gas", "plus", "during", "morning", "evening", "nothing",
    "something", "anything", "everything", "thing", "king", "ring", "sing", "bring", "spring",
    "string", "wing", "wedding", "ceiling", "sibling", "darling", "ping", "swing", "sting",
    "ding", "cling", "fling", "sling", "bed", "red", "shed", "need", "feed", "seed", "speed",
    "indeed", "hundred", "sacred", "naked", "wicked", "kindred", "series", "species", "less",
    "unless", "christmas", "pants", "glasses", "clothes", "ages", "lens", "chaos", "canvas",
    "bias", "alias", "atlas", "always", "sometimes", "besides", "towards", "afterwards",
    "kids'", "awkward", "wed", "led", "fled", "sled", "bled", "bored",
];

static IRREGULAR_MAP: LazyLock<HashMap<&'static str, &'static str>> =
    LazyLock::new(|| IRREGULAR.iter().copied().collect());

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &[u8]) -> bool {
    s.iter().any(|&c| is_vowel(c) || c == b'y')
}

/// Consonant at position `i`, treating `y` after a consonant as a vowel.
fn is_consonant(s: &[u8], i: usize) -> bool {
    match s[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(s, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences (the Porter "measure").
fn measure(s: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..s.len() {
        let c = is_consonant(s, i);
        if c && prev_vowel {
            m += 1;
        }
        prev_vowel = !c;
    }
    m
}

fn ends_cvc(s: &[u8]) -> bool {
    let n = s.len();
    n >= 3
        && is_consonant(s, n - 3)
        && !is_consonant(s, n - 2)
        && is_consonant(s, n - 1)
        && !matches!(s[n - 1], b'w' | b'x' | b'y')
}

/// Repairs a stem left after stripping `-ing` / `-ed`.
fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z')
    {
        return stem[..n - 1].to_string();
    }
    // "creat" → "create", but "eat", "heat" stay
    let silent_e = (stem.ends_with("at") && n >= 3 && is_consonant(b, n - 3))
        || stem.ends_with("bl")
        || stem.ends_with("iz")
        || matches!(b[n - 1], b'c' | b'v' | b'u')
        || (measure(b) == 1 && ends_cvc(b));
    if silent_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

/// Reduces a lowercase token to its dictionary form. Returns the input unchanged
/// when no rule applies.
pub fn lemmatize(token: &str) -> String {
    if let Some(base) = IRREGULAR_MAP.get(token) {
        return (*base).to_string();
    }
    if KEEP.contains(&token) || !token.is_ascii() || token.contains('\'') {
        return token.to_string();
    }
    let n = token.len();
    if n > 4 && token.ends_with("ies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n > 4 && token.ends_with("ied") {
        return format!("{}y", &token[..n - 3]);
    }
    if n > 5 && token.ends_with("ing") {
        let stem = &token[..n - 3];
        if stem.len() >= 3 && has_vowel(stem.as_bytes()) {
            return restore_stem(stem);
        }
        return token.to_string();
    }
    if n > 4 && token.ends_with("ed") && !token.ends_with("eed") {
        let stem = &token[..n - 2];
        if stem.len() >= 3 && has_vowel(stem.as_bytes()) {
            return restore_stem(stem);
        }
        return token.to_string();
    }
    if n > 3 && token.ends_with("es") {
        let stem = &token[..n - 2];
        if stem.ends_with('s')
            || stem.ends_with('x')
            || stem.ends_with('z')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
        {
            return stem.to_string();
        }
    }
    if n > 3
        && token.ends_with('s')
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        return token[..n - 1].to_string();
    }
    token.to_string()
}
