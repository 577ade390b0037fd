//! Emotion-cluster lexicon and the keyword matchers that turn entry texts
//! into 10-d cluster vectors and 60-d seed-word indicator vectors.
//!
//! The lexicon is a static config file; matching is deterministic keyword
//! containment on lowercased, punctuation-stripped tokens. Multi-word
//! phrases match as substrings of the normalized text.

use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

/// Number of emotion clusters.
pub const NUM_CLUSTERS: usize = 10;
/// Seed-word count feeding the indicator vector.
pub const SEED_WORDS: usize = 60;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("lexicon is invalid: {0}")]
    InvalidLexicon(String),
    #[error("lexicon has {0} keywords, need at least {SEED_WORDS} seed words")]
    LexiconSizeMismatch(usize),
    #[error("text is empty after normalization")]
    EmptyText,
}

/// Presence bits over the 10 clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterVector {
    bits: [u8; NUM_CLUSTERS],
}

impl ClusterVector {
    pub fn zero() -> Self {
        Self { bits: [0; NUM_CLUSTERS] }
    }

    pub fn from_bits(bits: [u8; NUM_CLUSTERS]) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[u8; NUM_CLUSTERS] {
        &self.bits
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Presence bits over the 60 seed words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVector {
    bits: [u8; SEED_WORDS],
}

impl IndicatorVector {
    pub fn zero() -> Self {
        Self { bits: [0; SEED_WORDS] }
    }

    pub fn from_bits(bits: [u8; SEED_WORDS]) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[u8; SEED_WORDS] {
        &self.bits
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

}

/// Result of matching a word list against the lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct WordAssignment {
    pub vector: ClusterVector,
    /// Input words that matched no keyword, in input order.
    pub unmatched: Vec<String>,
}

/// Ten named keyword clusters with a unique keyword-to-cluster index.
#[derive(Debug, Clone)]
pub struct ClusterLexicon {
    names: Vec<String>,
    keywords: Vec<Vec<String>>,
    word_index: HashMap<String, usize>,
    /// First 60 keywords in file order.
    seeds: Vec<String>,
}

/// Lowercase and replace every non-alphanumeric character with a space,
/// collapsing runs.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for c in ch.to_lowercase() {
                out.push(c);
            }
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

impl ClusterLexicon {
    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json_str(include_str!("../assets/lexicon.json"))
            .expect("builtin lexicon is valid")
    }

    /// Parse a JSON object mapping cluster name to keyword array. Cluster
    /// and keyword order follow the file.
    pub fn from_json_str(text: &str) -> Result<Self, ClusterError> {
        let doc: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| ClusterError::InvalidLexicon(format!("json parse error: {e}")))?;
        let mut names = Vec::new();
        let mut keywords: Vec<Vec<String>> = Vec::new();
        for (name, value) in doc {
            let arr = value.as_array().ok_or_else(|| {
                ClusterError::InvalidLexicon(format!("cluster `{name}` is not an array"))
            })?;
            let mut words = Vec::new();
            for w in arr {
                let w = w.as_str().ok_or_else(|| {
                    ClusterError::InvalidLexicon(format!("non-string keyword in `{name}`"))
                })?;
                let normalized = normalize_text(w);
                if normalized.is_empty() {
                    return Err(ClusterError::InvalidLexicon(format!(
                        "empty keyword in `{name}`"
                    )));
                }
                words.push(normalized);
            }
            if words.is_empty() {
                return Err(ClusterError::InvalidLexicon(format!("cluster `{name}` is empty")));
            }
            names.push(name);
            keywords.push(words);
        }
        Self::from_parts(names, keywords)
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self, ClusterError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ClusterError::InvalidLexicon(format!("read failed: {e}")))?;
        Self::from_json_str(&text)
    }

    fn from_parts(names: Vec<String>, keywords: Vec<Vec<String>>) -> Result<Self, ClusterError> {
        if names.len() != NUM_CLUSTERS {
            return Err(ClusterError::InvalidLexicon(format!(
                "expected {NUM_CLUSTERS} clusters, got {}",
                names.len()
            )));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for n in &names {
                if !seen.insert(n.as_str()) {
                    return Err(ClusterError::InvalidLexicon(format!("duplicate cluster `{n}`")));
                }
            }
        }
        let mut word_index = HashMap::new();
        let mut seeds = Vec::new();
        for (c, words) in keywords.iter().enumerate() {
            for w in words {
                if word_index.insert(w.clone(), c).is_some() {
                    return Err(ClusterError::InvalidLexicon(format!(
                        "keyword `{w}` appears in more than one cluster"
                    )));
                }
                if seeds.len() < SEED_WORDS {
                    seeds.push(w.clone());
                }
            }
        }
        Ok(Self { names, keywords, word_index, seeds })
    }

    pub fn cluster_names(&self) -> &[String] {
        &self.names
    }

    pub fn keywords(&self, cluster: usize) -> &[String] {
        &self.keywords[cluster]
    }

    pub fn total_keywords(&self) -> usize {
        self.keywords.iter().map(|k| k.len()).sum()
    }

    pub fn cluster_of(&self, word: &str) -> Option<usize> {
        self.word_index.get(&normalize_text(word)).copied()
    }

    /// First 60 keywords in file order; errors when the lexicon is smaller.
    pub fn seed_words(&self) -> Result<&[String], ClusterError> {
        if self.seeds.len() < SEED_WORDS {
            return Err(ClusterError::LexiconSizeMismatch(self.total_keywords()));
        }
        Ok(&self.seeds)
    }

    /// Cluster presence bits for a feeling-word list. Unknown words never
    /// fail; they are returned in `unmatched`.
    pub fn assign_feeling_words<S: AsRef<str>>(&self, words: &[S]) -> WordAssignment {
        let mut vector = ClusterVector::zero();
        let mut unmatched = Vec::new();
        for w in words {
            let normalized = normalize_text(w.as_ref());
            if normalized.is_empty() {
                continue;
            }
            match self.word_index.get(&normalized) {
                Some(&c) => vector.bits[c] = 1,
                None => unmatched.push(w.as_ref().to_string()),
            }
        }
        WordAssignment { vector, unmatched }
    }

    /// Count keyword hits of one cluster inside a normalized text.
    fn cluster_hits(&self, cluster: usize, normalized: &str, tokens: &[&str]) -> usize {
        let mut hits = 0;
        for kw in &self.keywords[cluster] {
            if kw.contains(' ') {
                hits += count_phrase(normalized, kw);
            } else {
                hits += tokens.iter().filter(|&&t| t == kw).count();
            }
        }
        hits
    }

    /// Score clusters by keyword-hit count and select up to four of the
    /// best ones (at least three when that many clusters have hits).
    /// Zero-hit clusters are never selected; no hits at all yields the
    /// all-zero vector. Ties break toward the lower cluster id.
    pub fn assign_essay(&self, text: &str) -> Result<ClusterVector, ClusterError> {
        self.assign_essay_k(text, 3, 4)
    }

    pub fn assign_essay_k(
        &self,
        text: &str,
        min_k: usize,
        max_k: usize,
    ) -> Result<ClusterVector, ClusterError> {
        let normalized = normalize_text(text);
        if normalized.is_empty() {
            return Err(ClusterError::EmptyText);
        }
        let tokens: Vec<&str> = normalized.split(' ').collect();
        let counts: Vec<usize> = (0..NUM_CLUSTERS)
            .map(|c| self.cluster_hits(c, &normalized, &tokens))
            .collect();
        let nonzero = counts.iter().filter(|&&c| c > 0).count();
        if nonzero == 0 {
            return Ok(ClusterVector::zero());
        }
        let k = max_k.min(min_k.max(nonzero)).min(nonzero);
        let mut order: Vec<usize> = (0..NUM_CLUSTERS).collect();
        // Stable sort by descending count keeps lower ids first on ties.
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
        let mut vector = ClusterVector::zero();
        for &c in order.iter().take(k) {
            vector.bits[c] = 1;
        }
        Ok(vector)
    }

    /// Per-seed-word presence bits over a text (covers both entry kinds:
    /// a feeling-word list is matched as text).
    pub fn indicator_60(&self, text: &str) -> Result<IndicatorVector, ClusterError> {
        let seeds = self.seed_words()?;
        let normalized = normalize_text(text);
        let tokens: Vec<&str> = normalized.split(' ').filter(|t| !t.is_empty()).collect();
        let mut out = IndicatorVector::zero();
        for (i, seed) in seeds.iter().enumerate() {
            let present = if seed.contains(' ') {
                count_phrase(&normalized, seed) > 0
            } else {
                tokens.iter().any(|&t| t == seed.as_str())
            };
            if present {
                out.bits[i] = 1;
            }
        }
        Ok(out)
    }
}

/// Occurrences of a normalized multi-word phrase at token boundaries.
fn count_phrase(normalized: &str, phrase: &str) -> usize {
    let padded = format!(" {normalized} ");
    let needle = format!(" {phrase} ");
    let mut count = 0;
    let mut start = 0;
    while let Some(pos) = padded[start..].find(&needle) {
        count += 1;
        // Overlap at the shared boundary space.
        start += pos + needle.len() - 1;
    }
    count
}
