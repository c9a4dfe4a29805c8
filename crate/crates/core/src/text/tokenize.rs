#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased form used for lookups.
    pub norm: String,
    /// Form as written, kept for capitalization cues.
    pub original: String,
    pub is_word: bool,
}

impl Token {
    /// True for words written entirely in capitals (at least two letters).
    pub fn is_all_caps(&self) -> bool {
        let letters: Vec<char> = self.original.chars().filter(|c| c.is_alphabetic()).collect();
        letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
    }
}

/// Splits text into word tokens (alphanumeric runs, with internal apostrophes kept so
/// possessives stay attached) and single-character punctuation tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len() {
                // an apostrophe stays inside a word when a letter or digit follows
                let inner_apostrophe =
                    chars[i] == '\'' && i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
                if chars[i].is_alphanumeric() || inner_apostrophe {
                    i += 1;
                } else {
                    break;
                }
            }
            let original: String = chars[start..i].iter().collect();
            out.push(Token {
                norm: original.to_lowercase(),
                original,
                is_word: true,
            });
        } else {
            out.push(Token {
                norm: c.to_string(),
                original: c.to_string(),
                is_word: false,
            });
            i += 1;
        }
    }
    out
}
