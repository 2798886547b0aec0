//! Frequency-ranked vocabularies over tokenized caption corpora.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Words ordered by descending corpus frequency (ties lexicographic),
/// truncated to a size limit.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    limit: usize,
}

impl Vocabulary {
    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Count tokens across the corpus and keep the `limit` most frequent,
/// breaking frequency ties lexicographically.
pub fn build_vocabulary<'a, I>(corpus: I, limit: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for caption in corpus {
        for token in caption {
            *counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Contract(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(limit);

    let words: Vec<String> = ranked.into_iter().map(|(w, _)| w.to_string()).collect();
    let index = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    Ok(Vocabulary {
        words,
        index,
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|c| c.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn keeps_most_frequent() {
        let corpus = caps(&["a a b"]);
        let v = build_vocabulary(corpus.iter().map(|c| c.as_slice()), 1).unwrap();
        assert_eq!(v.words(), &["a".to_string()]);
    }

    #[test]
    fn equal_counts_break_lexicographically() {
        let corpus = caps(&["b a"]);
        let v = build_vocabulary(corpus.iter().map(|c| c.as_slice()), 2).unwrap();
        assert_eq!(v.words(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
    }

    #[test]
    fn empty_corpus_is_a_contract_error() {
        let corpus: Vec<Vec<String>> = vec![vec![]];
        let err = build_vocabulary(corpus.iter().map(|c| c.as_slice()), 5).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn zipfian_corpus_matches_counting_oracle() {
        // word_i appears (200 - i) times; an independent hash count must
        // yield the same top 100.
        let mut caption: Vec<String> = Vec::new();
        for i in 0..200 {
            for _ in 0..(200 - i) {
                caption.push(format!("w{i:03}"));
            }
        }
        let corpus = vec![caption];
        let v = build_vocabulary(corpus.iter().map(|c| c.as_slice()), 100).unwrap();

        let mut oracle: HashMap<String, u64> = HashMap::new();
        for t in &corpus[0] {
            *oracle.entry(t.clone()).or_insert(0) += 1;
        }
        let mut pairs: Vec<(String, u64)> = oracle.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let want: Vec<String> = pairs.into_iter().take(100).map(|(w, _)| w).collect();
        assert_eq!(v.words(), want.as_slice());
    }
}
