//! Frozen vocabulary and sparse document vectors.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Post};
use crate::error::{Error, Result};
use crate::rng::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Raw counts times smoothed idf, L2-normalized per document.
    Tfidf,
    /// Term counts (or 0/1 presence when `binary` is set).
    Unigram,
}

/// How terms are ranked when the vocabulary is capped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    #[default]
    TotalFrequency,
    DocumentFrequency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    pub max_terms: Option<usize>,
    pub rank_by: RankBy,
    pub binary: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mode: FeatureMode::Tfidf,
            max_terms: Some(5000),
            rank_by: RankBy::TotalFrequency,
            binary: false,
        }
    }
}

impl FeatureConfig {
    pub fn tfidf(max_terms: Option<usize>) -> Self {
        FeatureConfig {
            mode: FeatureMode::Tfidf,
            max_terms,
            ..Default::default()
        }
    }

    pub fn unigram() -> Self {
        FeatureConfig {
            mode: FeatureMode::Unigram,
            max_terms: None,
            ..Default::default()
        }
    }
}

/// Sparse vector: `(column, weight)` pairs sorted by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Build from arbitrary pairs; duplicate columns are summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        FeatureVector { dim, entries }
    }

    pub fn dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        FeatureVector {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, column: usize) -> f64 {
        self.entries
            .binary_search_by_key(&column, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }
}

/// Vocabulary and idf weights fitted on a training corpus. Immutable once
/// built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FeatureSpaceFile", into = "FeatureSpaceFile")]
pub struct FeatureSpace {
    config: FeatureConfig,
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Option<Vec<f64>>,
    n_train_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceFile {
    mode: FeatureMode,
    vocabulary: Vec<String>,
    idf: Option<Vec<f64>>,
    max_terms: Option<usize>,
    n_train_docs: usize,
    #[serde(default)]
    rank_by: RankBy,
    #[serde(default)]
    binary: bool,
}

impl From<FeatureSpaceFile> for FeatureSpace {
    fn from(f: FeatureSpaceFile) -> Self {
        FeatureSpace {
            config: FeatureConfig {
                mode: f.mode,
                max_terms: f.max_terms,
                rank_by: f.rank_by,
                binary: f.binary,
            },
            index: index_of(&f.vocabulary),
            terms: f.vocabulary,
            idf: f.idf,
            n_train_docs: f.n_train_docs,
        }
    }
}

impl From<FeatureSpace> for FeatureSpaceFile {
    fn from(s: FeatureSpace) -> Self {
        FeatureSpaceFile {
            mode: s.config.mode,
            vocabulary: s.terms,
            idf: s.idf,
            max_terms: s.config.max_terms,
            n_train_docs: s.n_train_docs,
            rank_by: s.config.rank_by,
            binary: s.config.binary,
        }
    }
}

fn index_of(terms: &[String]) -> HashMap<String, usize> {
    terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect()
}

/// `ln((1 + n_docs) / (1 + df)) + 1`
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

#[derive(Default)]
struct TermCounts {
    total: usize,
    docs: usize,
}

pub fn fit_feature_space(train: &Corpus, config: &FeatureConfig) -> Result<FeatureSpace> {
    if train.is_empty() {
        return Err(Error::Config("cannot fit features on an empty corpus".into()));
    }
    if config.max_terms == Some(0) {
        return Err(Error::Config("max_terms must be at least 1".into()));
    }
    let mut counts: HashMap<&str, TermCounts> = HashMap::new();
    for post in train.posts() {
        let mut seen = std::collections::HashSet::new();
        for token in post.tokens() {
            let entry = counts.entry(token.as_str()).or_default();
            entry.total += 1;
            if seen.insert(token.as_str()) {
                entry.docs += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let mut ranked: Vec<(&str, &TermCounts)> = counts.iter().map(|(t, c)| (*t, c)).collect();
    let key = |c: &TermCounts| match config.rank_by {
        RankBy::TotalFrequency => c.total,
        RankBy::DocumentFrequency => c.docs,
    };
    ranked.sort_by(|a, b| key(b.1).cmp(&key(a.1)).then_with(|| a.0.cmp(b.0)));
    if let Some(cap) = config.max_terms {
        ranked.truncate(cap);
    }

    let n_docs = train.len();
    let idf = (config.mode == FeatureMode::Tfidf)
        .then(|| ranked.iter().map(|(_, c)| smoothed_idf(n_docs, c.docs)).collect());
    let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
    Ok(FeatureSpace {
        config: config.clone(),
        index: index_of(&terms),
        terms,
        idf,
        n_train_docs: n_docs,
    })
}

impl FeatureSpace {
    pub fn mode(&self) -> FeatureMode {
        self.config.mode
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self) -> Option<&[f64]> {
        self.idf.as_deref()
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    pub fn transform(&self, post: &Post) -> FeatureVector {
        self.transform_tokens(post.tokens())
    }

    /// Depends only on the token multiset: counts are integers and entries
    /// are summed in column order.
    pub fn transform_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> FeatureVector {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for token in tokens {
            if let Some(&col) = self.index.get(token.as_ref()) {
                *counts.entry(col).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(c, n)| (c, n as f64)).collect();
        entries.sort_by_key(|&(c, _)| c);

        match (&self.config.mode, &self.idf) {
            (FeatureMode::Tfidf, Some(idf)) => {
                for (col, w) in &mut entries {
                    *w *= idf[*col];
                }
                let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, w) in &mut entries {
                        *w /= norm;
                    }
                }
            }
            _ if self.config.binary => {
                for (_, w) in &mut entries {
                    *w = 1.0;
                }
            }
            _ => {}
        }
        FeatureVector {
            dim: self.dim(),
            entries,
        }
    }

    pub fn transform_corpus(&self, corpus: &Corpus) -> Vec<FeatureVector> {
        corpus.posts().iter().map(|p| self.transform(p)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let space: FeatureSpace = serde_json::from_str(json)?;
        space.check()?;
        Ok(space)
    }

    fn check(&self) -> Result<()> {
        if self.index.len() != self.terms.len() {
            return Err(Error::Config("feature space vocabulary has duplicate terms".into()));
        }
        match (&self.config.mode, &self.idf) {
            (FeatureMode::Tfidf, Some(idf)) if idf.len() == self.terms.len() && idf.iter().all(|v| *v > 0.0) => Ok(()),
            (FeatureMode::Tfidf, _) => Err(Error::Config("tfidf feature space needs one positive idf per term".into())),
            (FeatureMode::Unigram, None) => Ok(()),
            (FeatureMode::Unigram, Some(_)) => Err(Error::Config("unigram feature space must not carry idf".into())),
        }
    }

    /// SHA-256 of the canonical JSON form; models record it to tie themselves
    /// to the space they were trained on.
    pub fn fingerprint(&self) -> String {
        sha256_hex(self.to_json().expect("feature space serializes").as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}
