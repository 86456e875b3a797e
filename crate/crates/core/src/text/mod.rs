//! Tokenization, stopword filtering and stemming shared by indexing and
//! query processing.

pub mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// A set of lowercase function words removed during normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stopwords {
    words: BTreeSet<String>,
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl Stopwords {
    pub fn empty() -> Self {
        Self {
            words: BTreeSet::new(),
        }
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Text normalization settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stopwords: Stopwords,
    pub stemming: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stopwords: Stopwords::default(),
            stemming: true,
        }
    }
}

impl PipelineConfig {
    /// No stopwords, no stemming: tokens are only lowercased and split.
    pub fn raw() -> Self {
        Self {
            stopwords: Stopwords::empty(),
            stemming: false,
        }
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Stem a single lowercase token, or return it unchanged when stemming is off.
    pub fn stem(&self, word: &str) -> String {
        if self.stemming {
            stem_fixpoint(word)
        } else {
            word.to_string()
        }
    }

    /// Normalize a term and join multi-token results with single spaces.
    pub fn normalize_phrase(&self, text: &str) -> String {
        normalize(text, self).join(" ")
    }
}

/// Repeats Porter stemming until the output stops changing, so that
/// normalizing already-normalized text is the identity.
pub fn stem_fixpoint(word: &str) -> String {
    let mut current = porter::stem(word);
    loop {
        let next = porter::stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Lowercase and split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Lowercased, punctuation-stripped, stopword-filtered, stemmed terms in
/// original order.
pub fn normalize(text: &str, config: &PipelineConfig) -> Vec<String> {
    normalize_with_surface(text, config)
        .into_iter()
        .map(|(_, term)| term)
        .collect()
}

/// Like [`normalize`], but keeps the lowercased surface token next to each term.
pub fn normalize_with_surface(text: &str, config: &PipelineConfig) -> Vec<(String, String)> {
    tokenize(text)
        .filter(|t| !config.is_stopword(t))
        .map(|t| {
            let term = config.stem(&t);
            (t, term)
        })
        .filter(|(_, term)| !term.is_empty() && !config.is_stopword(term))
        .collect()
}
