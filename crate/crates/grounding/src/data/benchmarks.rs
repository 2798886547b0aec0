//! Gold-standard evaluation inputs: similarity/relatedness pairs,
//! categorization sets, and concept/relation/relatum tuples. All files are
//! UTF-8, tab-separated, one record per line; words go through the same
//! normalization as caption tokens.

use crate::data::text::normalize_word;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

/// "word1 TAB word2 TAB gold score" records.
#[derive(Clone, Debug)]
pub struct SimilarityBenchmark {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

/// "word TAB category" records.
#[derive(Clone, Debug)]
pub struct CategorySet {
    pub name: String,
    pub items: Vec<(String, String)>,
}

impl CategorySet {
    pub fn categories(&self) -> BTreeSet<&str> {
        self.items.iter().map(|(_, c)| c.as_str()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlessRelation {
    Coord,
    Hyper,
    Mero,
    Attri,
    Event,
    Random,
}

impl BlessRelation {
    pub const ALL: [BlessRelation; 6] = [
        BlessRelation::Coord,
        BlessRelation::Hyper,
        BlessRelation::Mero,
        BlessRelation::Attri,
        BlessRelation::Event,
        BlessRelation::Random,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "coord" => Some(Self::Coord),
            "hyper" => Some(Self::Hyper),
            "mero" => Some(Self::Mero),
            "attri" => Some(Self::Attri),
            "event" => Some(Self::Event),
            // source distributions split the distractor class by part of
            // speech; fold them into one label
            "random" | "random-n" | "random-j" | "random-v" => Some(Self::Random),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Coord => "coord",
            Self::Hyper => "hyper",
            Self::Mero => "mero",
            Self::Attri => "attri",
            Self::Event => "event",
            Self::Random => "random",
        }
    }
}

impl fmt::Display for BlessRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct BlessTuple {
    pub concept: String,
    pub relation: BlessRelation,
    pub relatum: String,
}

/// "concept TAB relation TAB relatum" records.
#[derive(Clone, Debug)]
pub struct BlessDataset {
    pub tuples: Vec<BlessTuple>,
}

fn read_lines(path: &Path) -> Result<(String, Vec<(usize, String)>)> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    let display = path.display().to_string();
    let lines = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect();
    Ok((display, lines))
}

fn split_tabs<'a>(line: &'a str, want: usize, path: &str, lineno: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
    if fields.len() != want || fields.iter().any(|f| f.is_empty()) {
        return Err(Error::Format {
            path: path.to_string(),
            line: lineno,
            msg: format!("expected {want} tab-separated fields, got '{line}'"),
        });
    }
    Ok(fields)
}

pub fn load_similarity(
    path: impl AsRef<Path>,
    name: &str,
    fold_case: bool,
) -> Result<SimilarityBenchmark> {
    let (display, lines) = read_lines(path.as_ref())?;
    let mut pairs = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (lineno, line) in &lines {
        let fields = split_tabs(line, 3, &display, *lineno)?;
        let score: f64 = fields[2].parse().map_err(|_| Error::Format {
            path: display.clone(),
            line: *lineno,
            msg: format!("unparsable score '{}'", fields[2]),
        })?;
        if !score.is_finite() {
            return Err(Error::Format {
                path: display.clone(),
                line: *lineno,
                msg: format!("non-finite score '{}'", fields[2]),
            });
        }
        let w1 = normalize_word(fields[0], fold_case);
        let w2 = normalize_word(fields[1], fold_case);
        if seen.insert((w1.clone(), w2.clone())) {
            pairs.push((w1, w2, score));
        }
    }
    Ok(SimilarityBenchmark {
        name: name.to_string(),
        pairs,
    })
}

pub fn load_categories(path: impl AsRef<Path>, name: &str, fold_case: bool) -> Result<CategorySet> {
    let (display, lines) = read_lines(path.as_ref())?;
    let mut items = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (lineno, line) in &lines {
        let fields = split_tabs(line, 2, &display, *lineno)?;
        let word = normalize_word(fields[0], fold_case);
        if seen.insert(word.clone()) {
            items.push((word, fields[1].to_string()));
        }
    }
    let set = CategorySet {
        name: name.to_string(),
        items,
    };
    if set.categories().len() < 2 {
        return Err(Error::Contract(format!(
            "category set '{name}' needs at least 2 distinct categories, found {}",
            set.categories().len()
        )));
    }
    Ok(set)
}

pub fn load_bless(path: impl AsRef<Path>, fold_case: bool) -> Result<BlessDataset> {
    let (display, lines) = read_lines(path.as_ref())?;
    let mut tuples = Vec::new();
    for (lineno, line) in &lines {
        let fields = split_tabs(line, 3, &display, *lineno)?;
        let relation = BlessRelation::parse(fields[1]).ok_or_else(|| Error::Format {
            path: display.clone(),
            line: *lineno,
            msg: format!("unknown relation '{}'", fields[1]),
        })?;
        tuples.push(BlessTuple {
            concept: normalize_word(fields[0], fold_case),
            relation,
            relatum: normalize_word(fields[2], fold_case),
        });
    }
    Ok(BlessDataset { tuples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.tsv");
        fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn similarity_line_parses() {
        let (_d, path) = write("car\tautomobile\t9.2\n");
        let b = load_similarity(&path, "toy", true).unwrap();
        assert_eq!(b.pairs.len(), 1);
        assert_eq!(b.pairs[0], ("car".into(), "automobile".into(), 9.2));
    }

    #[test]
    fn malformed_similarity_line_reports_number() {
        let (_d, path) = write("car\tautomobile\t9.2\ncar only\n");
        let err = load_similarity(&path, "toy", true).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_category_file_is_rejected() {
        let (_d, path) = write("dog\tanimal\ncat\tanimal\n");
        let err = load_categories(&path, "toy", true).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn two_category_file_loads() {
        let (_d, path) = write("dog\tanimal\ncar\tvehicle\n");
        let c = load_categories(&path, "toy", true).unwrap();
        assert_eq!(c.items.len(), 2);
        assert_eq!(c.categories().len(), 2);
    }

    #[test]
    fn bless_line_parses() {
        let (_d, path) = write("lizard\tattri\tstriped\n");
        let b = load_bless(&path, true).unwrap();
        assert_eq!(b.tuples.len(), 1);
        assert_eq!(b.tuples[0].concept, "lizard");
        assert_eq!(b.tuples[0].relation, BlessRelation::Attri);
        assert_eq!(b.tuples[0].relatum, "striped");
    }

    #[test]
    fn bless_random_pos_variants_fold_to_random() {
        let (_d, path) = write("dog\trandom-n\tspoon\ndog\trandom-j\tblue\n");
        let b = load_bless(&path, true).unwrap();
        assert!(b.tuples.iter().all(|t| t.relation == BlessRelation::Random));
    }

    #[test]
    fn unknown_relation_is_a_format_error() {
        let (_d, path) = write("dog\tfriend\tcat\n");
        let err = load_bless(&path, true).unwrap_err();
        assert_eq!(err.category(), "format");
    }
}
