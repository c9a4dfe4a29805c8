use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Word-level affect ratings: every entry has one value per named dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub name: String,
    pub dims: Vec<String>,
    entries: HashMap<String, Vec<f64>>,
}

impl Lexicon {
    pub fn new(
        name: impl Into<String>,
        dims: Vec<String>,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let name = name.into();
        let mut map = HashMap::new();
        for (word, values) in entries {
            if values.len() != dims.len() {
                return Err(Error::DimensionMismatch {
                    expected: dims.len(),
                    actual: values.len(),
                    context: format!("lexicon {name}, word {word:?}"),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "lexicon {name}: non-finite value for {word:?}"
                )));
            }
            map.insert(word.to_lowercase(), values);
        }
        Ok(Lexicon {
            name,
            dims,
            entries: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Lexicon {
        Lexicon {
            name: self.name.clone(),
            dims: self.dims.clone(),
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }

    /// Parses the TSV format: a `word<TAB>dim1<TAB>...` header, then one row per word.
    pub fn from_tsv(name: &str, source: &str, data: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .has_headers(true)
            .from_reader(data.as_bytes());
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let header = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if header.len() < 2 || header.get(0) != Some("word") {
            return Err(parse_err(
                1,
                "header must be `word<TAB>dim1<TAB>...`".to_string(),
            ));
        }
        let dims: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let word = record.get(0).unwrap_or_default().trim();
            if word.is_empty() {
                return Err(parse_err(line, "empty word".to_string()));
            }
            let values = record
                .iter()
                .skip(1)
                .map(|f| {
                    let v: f64 = f
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad number {f:?}")))?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(parse_err(line, format!("non-finite value {f:?}")))
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push((word.to_string(), values));
        }
        Lexicon::new(name, dims, rows)
    }

    pub fn load(name: &str, path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::from_tsv(name, &path.display().to_string(), &data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tsv() {
        let lex = Lexicon::from_tsv("toy", "toy.tsv", "word\tv\ta\nGood\t1\t0.5\nbad\t-1\t0.2\n")
            .unwrap();
        assert_eq!(lex.dims, ["v", "a"]);
        assert_eq!(lex.get("good"), Some(&[1.0, 0.5][..]));
        assert_eq!(lex.get("Good"), None);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = Lexicon::from_tsv("toy", "toy.tsv", "word\tv\ta\ngood\t1\nbad\t1\t2\n")
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let err = Lexicon::from_tsv("toy", "toy.tsv", "word\tv\ngood\t1\nbad\tx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn bad_header() {
        assert!(Lexicon::from_tsv("toy", "toy.tsv", "term\tv\n").is_err());
    }
}
