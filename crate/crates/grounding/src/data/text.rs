//! Word normalization and caption tokenization.
//!
//! One char-level pipeline is shared by captions, embedding-table words and
//! benchmark words, so a token produced anywhere in the system can be looked
//! up anywhere else: NFC normalization, optional case folding, then removal
//! of every non-alphanumeric character. Stripping to alphanumerics drops
//! punctuation and symbols; Arabic vowel marks carry the Alphabetic
//! property and pass through.

use serde::{Deserialize, Serialize};
use std::fmt;
use unicode_normalization::UnicodeNormalization;

/// BCP-47-style language tag ("en", "de", "ar").
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageTag(String);

/// Languages written in scripts without letter case; their text is never
/// case-folded.
const UNCASED: &[&str] = &["ar", "fa", "he", "ur"];

impl LanguageTag {
    pub fn new(tag: impl Into<String>) -> Self {
        LanguageTag(tag.into().to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether words in this language are lowercased during normalization.
    pub fn folds_case(&self) -> bool {
        !UNCASED.contains(&self.0.as_str())
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LanguageTag {
    fn from(s: &str) -> Self {
        LanguageTag::new(s)
    }
}

/// Normalize a single word: NFC, optional lowercase, keep alphanumerics only.
/// Returns an empty string for pure-punctuation input.
pub fn normalize_word(word: &str, fold_case: bool) -> String {
    let composed: String = word.nfc().collect();
    let cased = if fold_case {
        composed.to_lowercase()
    } else {
        composed
    };
    cased.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Whitespace-split a caption and normalize each token; empty tokens are
/// dropped. Case folding follows the language tag.
pub fn tokenize(text: &str, language: &LanguageTag) -> Vec<String> {
    let fold = language.folds_case();
    text.split_whitespace()
        .map(|t| normalize_word(t, fold))
        .filter(|t| !t.is_empty())
        .collect()
}
