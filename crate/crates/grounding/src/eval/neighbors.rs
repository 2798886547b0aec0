//! Nearest-neighbor queries and textual-vs-grounded neighborhood diffing.

use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::similarity::cosine;
use serde::Serialize;
use std::collections::BTreeSet;

/// Top-k words by cosine to `word`, the query itself excluded. Ties break
/// lexicographically; zero-norm candidates cannot be ranked and are skipped.
pub fn top_k_neighbors(
    table: &EmbeddingTable,
    word: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k < 1 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let query = table
        .vector(word)
        .ok_or_else(|| Error::Lookup(word.to_string()))?;
    if query.iter().all(|&v| v == 0.0) {
        return Err(Error::Contract(format!(
            "query word '{word}' has a zero vector"
        )));
    }
    let mut scored: Vec<(String, f64)> = Vec::new();
    for candidate in table.words() {
        if candidate == word {
            continue;
        }
        let v = table.vector(candidate).expect("listed word");
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        scored.push((candidate.clone(), cosine(query, v)?));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

#[derive(Clone, Debug, Serialize)]
pub struct NeighborDiff {
    pub word: String,
    pub k: usize,
    pub textual: Vec<(String, f64)>,
    pub grounded: Vec<(String, f64)>,
    /// Neighbors appearing in the textual top-k only, in rank order.
    pub unique_to_textual: Vec<String>,
    /// Neighbors appearing in the grounded top-k only, in rank order.
    pub unique_to_grounded: Vec<String>,
}

/// Compare a word's top-k neighborhoods between the textual and grounded
/// spaces; the word must be present in both tables.
pub fn neighbor_diff(
    word: &str,
    k: usize,
    textual: &EmbeddingTable,
    grounded: &EmbeddingTable,
) -> Result<NeighborDiff> {
    if !textual.contains(word) || !grounded.contains(word) {
        return Err(Error::Lookup(word.to_string()));
    }
    let textual_top = top_k_neighbors(textual, word, k)?;
    let grounded_top = top_k_neighbors(grounded, word, k)?;
    let t_set: BTreeSet<&str> = textual_top.iter().map(|(w, _)| w.as_str()).collect();
    let g_set: BTreeSet<&str> = grounded_top.iter().map(|(w, _)| w.as_str()).collect();
    let unique_to_textual = textual_top
        .iter()
        .filter(|(w, _)| !g_set.contains(w.as_str()))
        .map(|(w, _)| w.clone())
        .collect();
    let unique_to_grounded = grounded_top
        .iter()
        .filter(|(w, _)| !t_set.contains(w.as_str()))
        .map(|(w, _)| w.clone())
        .collect();
    Ok(NeighborDiff {
        word: word.to_string(),
        k,
        textual: textual_top,
        grounded: grounded_top,
        unique_to_textual,
        unique_to_grounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LanguageTag, Space};
    use crate::numcore::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(n: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<String> = (0..n).map(|i| format!("w{i:02}")).collect();
        let vectors = Matrix::from_fn(n, dim, |_, _| rng.random_range(-1.0..1.0));
        EmbeddingTable::from_parts(LanguageTag::new("en"), Space::Textual, words, vectors)
            .unwrap()
    }

    #[test]
    fn identical_tables_have_empty_diffs() {
        let t = random_table(20, 4, 1);
        let diff = neighbor_diff("w03", 5, &t, &t).unwrap();
        assert!(diff.unique_to_textual.is_empty());
        assert!(diff.unique_to_grounded.is_empty());
    }

    #[test]
    fn full_k_covers_the_whole_vocabulary() {
        let t1 = random_table(12, 4, 2);
        let t2 = random_table(12, 4, 3);
        let diff = neighbor_diff("w00", 11, &t1, &t2).unwrap();
        assert!(diff.unique_to_textual.is_empty());
        assert!(diff.unique_to_grounded.is_empty());
        assert_eq!(diff.textual.len(), 11);
    }

    #[test]
    fn top_k_matches_exhaustive_sort_oracle() {
        let t = random_table(50, 6, 4);
        let got = top_k_neighbors(&t, "w07", 10).unwrap();

        let query = t.vector("w07").unwrap();
        let mut oracle: Vec<(String, f64)> = t
            .words()
            .iter()
            .filter(|w| w.as_str() != "w07")
            .map(|w| {
                let v = t.vector(w).unwrap();
                let dot: f64 = query.iter().zip(v).map(|(a, b)| a * b).sum();
                let nq: f64 = query.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                (w.clone(), dot / (nq * nv))
            })
            .collect();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        oracle.truncate(10);
        for ((gw, gs), (ow, os)) in got.iter().zip(&oracle) {
            assert_eq!(gw, ow);
            assert!((gs - os).abs() < 1e-12);
        }
    }

    #[test]
    fn oov_query_is_a_lookup_error() {
        let t = random_table(5, 3, 5);
        let err = top_k_neighbors(&t, "ghost", 3).unwrap_err();
        assert!(matches!(err, Error::Lookup(_)));
    }

    #[test]
    fn ties_break_lexicographically() {
        // Two candidates at identical cosine to the query.
        let words = vec![
            "query".to_string(),
            "bravo".to_string(),
            "alpha".to_string(),
        ];
        let data = vec![1.0, 0.0, 2.0, 0.0, 1.0, 0.0];
        let table = EmbeddingTable::from_parts(
            LanguageTag::new("en"),
            Space::Textual,
            words,
            Matrix::from_vec(3, 2, data).unwrap(),
        )
        .unwrap();
        let got = top_k_neighbors(&table, "query", 2).unwrap();
        assert_eq!(got[0].0, "alpha");
        assert_eq!(got[1].0, "bravo");
    }
}
