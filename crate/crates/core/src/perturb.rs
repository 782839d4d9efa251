//! Topic-word manipulations and sentence shuffling.
//!
//! All transformations are deterministic. Randomness comes from
//! [`rng::substream`] keyed by the global seed plus the post id (within-post)
//! or the label group (cross-post), so subsetting or reordering a corpus
//! never changes what an individual post receives.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{token_spans, tokenize, Corpus, Label, Post};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Extracted,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    pub terms: BTreeSet<String>,
    pub provenance: Provenance,
    /// Requested number of base terms.
    pub k: usize,
    /// Set when fewer than `k` eligible terms existed.
    pub short: bool,
}

impl WordList {
    pub fn user_supplied(terms: impl IntoIterator<Item = String>) -> Result<Self> {
        let terms: BTreeSet<String> = terms.into_iter().collect();
        for term in &terms {
            check_single_token(term)?;
        }
        Ok(WordList {
            k: terms.len(),
            terms,
            provenance: Provenance::UserSupplied,
            short: false,
        })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    /// Parse the plain-text format: one term per line, `#` starts a comment.
    pub fn parse(content: &str) -> Result<Self> {
        let terms = content
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|term| !term.is_empty());
        Self::user_supplied(terms)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for term in &self.terms {
            out.push_str(term);
            out.push('\n');
        }
        out
    }
}

fn check_single_token(term: &str) -> Result<()> {
    if tokenize(term) == [term] {
        Ok(())
    } else {
        Err(Error::Config(format!("{term:?} is not a single lowercase token")))
    }
}

pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "aren't", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "can't", "could", "couldn't", "did", "didn't", "do", "does", "doesn't",
    "doing", "don't", "down", "during", "each", "few", "for", "from", "further", "get", "got",
    "had", "hadn't", "has", "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's",
    "her", "here", "here's", "hers", "herself", "him", "himself", "his", "how", "how's", "i",
    "i'd", "i'll", "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its",
    "itself", "just", "let's", "like", "me", "more", "most", "mustn't", "my", "myself", "no",
    "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "ought", "our",
    "ours", "ourselves", "out", "over", "own", "really", "same", "shan't", "she", "she'd",
    "she'll", "she's", "should", "shouldn't", "so", "some", "such", "than", "that", "that's",
    "the", "their", "theirs", "them", "themselves", "then", "there", "there's", "these", "they",
    "they'd", "they'll", "they're", "they've", "this", "those", "through", "to", "too", "under",
    "until", "up", "very", "was", "wasn't", "we", "we'd", "we'll", "we're", "we've", "were",
    "weren't", "what", "what's", "when", "when's", "where", "where's", "which", "while", "who",
    "who's", "whom", "why", "why's", "will", "with", "won't", "would", "wouldn't", "you",
    "you'd", "you'll", "you're", "you've", "your", "yours", "yourself", "yourselves",
];

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// The `k` most frequent non-stopword terms of the training corpus, ties
/// broken lexicographically.
pub fn extract_topic_words(train: &Corpus, k: usize, stopwords: &BTreeSet<String>) -> Result<WordList> {
    if train.is_empty() {
        return Err(Error::Config("cannot extract topic words from an empty corpus".into()));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for token in train.posts().iter().flat_map(|p| p.tokens()) {
        if !stopwords.contains(token) {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let short = ranked.len() < k;
    Ok(WordList {
        terms: ranked.into_iter().take(k).map(|(t, _)| t.to_string()).collect(),
        provenance: Provenance::Extracted,
        k,
        short,
    })
}

const SUFFIXES: [&str; 5] = ["'s", "s", "es", "ed", "ing"];
const MIN_STEM: usize = 3;

/// The word itself plus every stem obtained by stripping one suffix, with a
/// silent `e` restored after `ed`/`ing` when that form is a known term.
fn stem_forms(word: &str, known: &BTreeSet<&str>) -> BTreeSet<String> {
    let mut forms = BTreeSet::from([word.to_string()]);
    for suffix in SUFFIXES {
        let Some(stem) = word.strip_suffix(suffix) else { continue };
        if stem.chars().count() >= MIN_STEM {
            forms.insert(stem.to_string());
        }
        if matches!(suffix, "ed" | "ing") {
            let with_e = format!("{stem}e");
            if with_e.chars().count() >= MIN_STEM && known.contains(with_e.as_str()) {
                forms.insert(with_e);
            }
        }
    }
    forms
}

/// Add every vocabulary term whose stem forms overlap a base term's forms.
pub fn expand_variants(base: &WordList, vocab: &BTreeSet<String>) -> Result<WordList> {
    if base.terms.is_empty() {
        return Err(Error::Config("cannot expand an empty word list".into()));
    }
    let known: BTreeSet<&str> = vocab.iter().chain(&base.terms).map(String::as_str).collect();
    let base_forms: BTreeSet<String> = base.terms.iter().flat_map(|b| stem_forms(b, &known)).collect();
    let mut terms = base.terms.clone();
    for term in vocab {
        if stem_forms(term, &known).iter().any(|f| base_forms.contains(f)) {
            terms.insert(term.clone());
        }
    }
    Ok(WordList { terms, ..base.clone() })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManipulationKind {
    Remove,
    Replace {
        #[serde(default = "default_replacement")]
        replacement: String,
    },
}

pub fn default_replacement() -> String {
    "nothing".to_string()
}

impl ManipulationKind {
    pub fn replace_with(token: impl Into<String>) -> Result<Self> {
        let replacement = token.into();
        check_single_token(&replacement)?;
        Ok(ManipulationKind::Replace { replacement })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ManipulationKind::Remove => Ok(()),
            ManipulationKind::Replace { replacement } => check_single_token(replacement),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ManipulationKind::Remove => "remove".to_string(),
            ManipulationKind::Replace { replacement } => format!("replace:{replacement}"),
        }
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Collapse whitespace runs (to a newline if the run had one, else a space),
/// drop horizontal whitespace before `.`, `!`, `?`, and trim the ends.
fn tidy_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if !c.is_whitespace() {
            out.push(c);
            continue;
        }
        let mut newline = c == '\n';
        while let Some(&next) = chars.peek() {
            if !next.is_whitespace() {
                break;
            }
            newline |= next == '\n';
            chars.next();
        }
        if newline {
            out.push('\n');
        } else if !chars.peek().copied().is_some_and(is_closer) {
            out.push(' ');
        }
    }
    out.trim().to_string()
}

/// Delete or replace every whole-token occurrence of a listed word. A post
/// without matches comes back unchanged.
pub fn apply_word_manipulation(post: &Post, words: &WordList, kind: &ManipulationKind) -> Post {
    let text = post.text();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut matched = 0;
    for (start, end) in token_spans(text) {
        out.push_str(&text[last..start]);
        let token = &text[start..end];
        if words.contains(token) {
            matched += 1;
            if let ManipulationKind::Replace { replacement } = kind {
                out.push_str(replacement);
            }
        } else {
            out.push_str(token);
        }
        last = end;
    }
    if matched == 0 {
        return post.clone();
    }
    out.push_str(&text[last..]);
    post.with_text(tidy_whitespace(&out))
}

pub fn manipulate_corpus(corpus: &Corpus, words: &WordList, kind: &ManipulationKind) -> Corpus {
    corpus.map_posts(|p| apply_word_manipulation(p, words, kind))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleKind {
    WithinPost,
    CrossPost,
}

impl fmt::Display for ShuffleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShuffleKind::WithinPost => "within_post",
            ShuffleKind::CrossPost => "cross_post",
        })
    }
}

impl std::str::FromStr for ShuffleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within" | "within_post" => Ok(ShuffleKind::WithinPost),
            "cross" | "cross_post" => Ok(ShuffleKind::CrossPost),
            other => Err(Error::Config(format!("unknown shuffle kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShuffleSpec {
    pub kind: ShuffleKind,
    pub seed: u64,
}

/// Post with `sentences` as its body; keeps the original text when the
/// sentence order did not change.
fn with_sentences(post: &Post, sentences: &[String]) -> Post {
    if sentences == post.sentences() {
        post.clone()
    } else {
        post.with_text(join_sentences(sentences))
    }
}

/// Inverse of sentence segmentation: a sentence without a closing `.!?`
/// ended at a line break, so it is followed by a newline rather than a space.
pub fn join_sentences(sentences: &[String]) -> String {
    let mut text = String::new();
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            text.push(if sentences[i - 1].ends_with(is_closer) { ' ' } else { '\n' });
        }
        text.push_str(sentence);
    }
    text
}

pub fn shuffle_within(post: &Post, seed: u64) -> Post {
    if post.sentences().len() < 2 {
        return post.clone();
    }
    let mut sentences = post.sentences().to_vec();
    let mut rng = rng::substream(seed, &format!("shuffle/within/{}", post.id()));
    sentences.shuffle(&mut rng);
    with_sentences(post, &sentences)
}

/// Pool the sentences of each label group, shuffle the pool once, and deal it
/// back so every post keeps its sentence count. Groups with a single post are
/// left as they are.
pub fn shuffle_cross(corpus: &Corpus, seed: u64) -> Corpus {
    let mut groups: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, post) in corpus.posts().iter().enumerate() {
        groups.entry(post.label()).or_default().push(i);
    }
    let mut posts = corpus.posts().to_vec();
    for (label, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let mut pool: Vec<String> = members
            .iter()
            .flat_map(|&i| corpus.posts()[i].sentences().iter().cloned())
            .collect();
        let mut rng = rng::substream(seed, &format!("shuffle/cross/label-{label}"));
        pool.shuffle(&mut rng);
        let mut rest = pool.as_slice();
        for &i in &members {
            let original = &corpus.posts()[i];
            let (mine, tail) = rest.split_at(original.sentences().len());
            posts[i] = with_sentences(original, mine);
            rest = tail;
        }
    }
    Corpus::from_posts(posts)
}

pub fn apply_shuffle(corpus: &Corpus, spec: &ShuffleSpec) -> Corpus {
    match spec.kind {
        ShuffleKind::WithinPost => corpus.map_posts(|p| shuffle_within(p, spec.seed)),
        ShuffleKind::CrossPost => shuffle_cross(corpus, spec.seed),
    }
}
