use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors of one fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub name: String,
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::invalid(format!("embedding {name}: dimension must be positive")));
        }
        let mut map = HashMap::new();
        for (word, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                    context: format!("embedding {name}, word {word:?}"),
                });
            }
            map.insert(word, v);
        }
        Ok(EmbeddingTable {
            name,
            dim,
            entries: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    /// Parses the GloVe-style text format (`word v1 v2 ... vd` per line). The
    /// dimension is taken from the first line; any line that disagrees aborts.
    pub fn from_text(name: &str, source: &str, data: &str) -> Result<Self> {
        let mut dim = None;
        let mut entries = HashMap::new();
        for (i, line) in data.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            path: source.to_string(),
                            line: lineno,
                            message: format!("bad value {f:?}"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.is_empty() || values.len() != expected {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: lineno,
                    message: format!("expected {expected} values, found {}", values.len()),
                });
            }
            entries.insert(word.to_string(), values);
        }
        let dim = dim.ok_or_else(|| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: "empty embedding file".to_string(),
        })?;
        EmbeddingTable::new(name, dim, entries)
    }

    pub fn load(name: &str, path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EmbeddingTable::from_text(name, &path.display().to_string(), &data)
    }
}
