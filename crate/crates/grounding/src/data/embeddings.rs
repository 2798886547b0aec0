//! Pre-trained embedding tables: whitespace-separated text files, one
//! "word v1 ... vd" entry per line.

use crate::data::text::{normalize_word, LanguageTag};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Textual,
    Grounded,
}

/// A vocabulary plus one dense vector per word. Word order is the file /
/// construction order, which makes saving deterministic.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    language: LanguageTag,
    space: Space,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

/// A loaded table plus ingestion counters.
#[derive(Debug)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    /// Lines discarded because their (normalized) word was already present.
    pub duplicate_words: usize,
}

impl EmbeddingTable {
    pub fn from_parts(
        language: LanguageTag,
        space: Space,
        words: Vec<String>,
        vectors: Matrix,
    ) -> Result<Self> {
        if words.len() != vectors.rows() {
            return Err(Error::Contract(format!(
                "{} words but {} vector rows",
                words.len(),
                vectors.rows()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Contract(format!("duplicate word '{w}' in table")));
            }
        }
        Ok(Self {
            language,
            space,
            dim: vectors.cols(),
            words,
            index,
            vectors,
        })
    }

    pub fn language(&self) -> &LanguageTag {
        &self.language
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.word_id(word).map(|i| self.vectors.row(i))
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.vectors.row(id)
    }

    /// Write in the same text format `load_embeddings` reads. Values are
    /// printed with the shortest representation that round-trips exactly.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for (i, word) in self.words.iter().enumerate() {
            out.push_str(word);
            for v in self.vectors.row(i) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Load a whitespace-separated embedding file. Words are normalized (NFC,
/// optional case fold, alphanumerics kept); when two lines normalize to the
/// same word the first wins and `duplicate_words` is incremented.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    language: LanguageTag,
    expected_dim: Option<usize>,
    fold_case: bool,
) -> Result<LoadedEmbeddings> {
    let path = path.as_ref();
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read embeddings {}: {e}", path.display())))?;
    let display = path.display().to_string();

    let mut words: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = expected_dim;
    let mut duplicates = 0usize;

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let raw_word = fields.next().expect("non-empty line has a first field");
        let mut values = Vec::new();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| Error::Format {
                path: display.clone(),
                line: lineno,
                msg: format!("unparsable real '{field}'"),
            })?;
            values.push(v);
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format {
                    path: display,
                    line: lineno,
                    msg: format!("expected {d} values, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        let word = normalize_word(raw_word, fold_case);
        if word.is_empty() {
            return Err(Error::Format {
                path: display,
                line: lineno,
                msg: format!("word '{raw_word}' is empty after normalization"),
            });
        }
        if index.contains_key(&word) {
            duplicates += 1;
            continue;
        }
        index.insert(word.clone(), words.len());
        words.push(word);
        data.extend(values);
    }

    let dim = dim.unwrap_or(0);
    let vectors = Matrix::from_vec(words.len(), dim, data).map_err(|e| {
        Error::Format {
            path: display,
            line: 0,
            msg: e.to_string(),
        }
    })?;
    Ok(LoadedEmbeddings {
        table: EmbeddingTable {
            language,
            space: Space::Textual,
            dim,
            words,
            index,
            vectors,
        },
        duplicate_words: duplicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn en() -> LanguageTag {
        LanguageTag::new("en")
    }

    #[test]
    fn loads_two_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "a 1 0\nb 0 1\n").unwrap();
        let loaded = load_embeddings(&path, en(), None, true).unwrap();
        assert_eq!(loaded.table.dim(), 2);
        assert_eq!(loaded.table.len(), 2);
        assert_eq!(loaded.table.vector("a").unwrap(), &[1.0, 0.0]);
        assert_eq!(loaded.duplicate_words, 0);
    }

    #[test]
    fn duplicate_word_keeps_first_and_warns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "a 1 0\na 9 9\n").unwrap();
        let loaded = load_embeddings(&path, en(), None, true).unwrap();
        assert_eq!(loaded.table.len(), 1);
        assert_eq!(loaded.table.vector("a").unwrap(), &[1.0, 0.0]);
        assert_eq!(loaded.duplicate_words, 1);
    }

    #[test]
    fn inconsistent_dimension_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "a 1 0\nb 1 2 3\n").unwrap();
        let err = load_embeddings(&path, en(), None, true).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unparsable_real_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "a 1 0\nb x 1\n").unwrap();
        let err = load_embeddings(&path, en(), None, true).unwrap_err();
        match err {
            Error::Format { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains('x'));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let words: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let vectors = Matrix::from_fn(10, 4, |_, _| rng.random_range(-5.0..5.0));
        let table =
            EmbeddingTable::from_parts(en(), Space::Textual, words, vectors.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.txt");
        table.save(&path).unwrap();
        let loaded = load_embeddings(&path, en(), Some(4), true).unwrap().table;
        assert_eq!(loaded.words(), table.words());
        for (a, b) in loaded.vectors().as_slice().iter().zip(vectors.as_slice()) {
            assert!((a - b).abs() < 1e-9);
            assert_eq!(a, b); // shortest-repr printing round-trips bitwise
        }
    }

    #[test]
    fn missing_file_is_an_ingestion_error() {
        let err = load_embeddings("/nonexistent/emb.txt", en(), None, true).unwrap_err();
        assert_eq!(err.category(), "ingestion");
    }
}
