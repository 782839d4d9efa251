//! Post ingestion, text normalization, segmentation, filtering and
//! stratified splitting.
//!
//! A [`Post`] always carries its token list and sentence list, derived from
//! its text at construction time, so every downstream consumer (features,
//! perturbations) sees the same notion of "word" and "sentence".

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng;

/// Binary class label. `Control` is 0, `Target` is 1 (the positive class).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Control,
    Target,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Control, Label::Target];

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Control => 0,
            Label::Target => 1,
        }
    }

    pub fn index(self) -> usize {
        self.as_u8() as usize
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::Control),
            1 => Ok(Label::Target),
            other => Err(format!("invalid label {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.as_u8()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// One labeled record as it appears in a corpus file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default)]
    pub source: String,
}

impl RawPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label, source: impl Into<String>) -> Self {
        RawPost {
            id: id.into(),
            text: text.into(),
            label,
            source: source.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Read raw posts from a JSONL or CSV file, preserving record order.
pub fn ingest(path: &Path, format: CorpusFormat) -> Result<Vec<RawPost>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => parse_jsonl(&content),
        CorpusFormat::Csv => parse_csv(&content),
    }
}

pub fn parse_jsonl(content: &str) -> Result<Vec<RawPost>> {
    let mut posts = Vec::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        let index = posts.len();
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Malformed {
            index,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Malformed {
            index,
            message: "record is not a JSON object".into(),
        })?;
        let string_field = |field: &'static str| -> Result<String> {
            match obj.get(field) {
                None | Some(Value::Null) => Err(Error::MissingField { index, field }),
                Some(Value::String(s)) => Ok(s.clone()),
                Some(other) => Err(Error::Malformed {
                    index,
                    message: format!("field `{field}` must be a string, got {other}"),
                }),
            }
        };
        let id = string_field("id")?;
        let text = string_field("text")?;
        let label = match obj.get("label") {
            None | Some(Value::Null) => return Err(Error::MissingField { index, field: "label" }),
            Some(v) => parse_label(index, &json_scalar(v))?,
        };
        let source = match obj.get("source") {
            None | Some(Value::Null) => String::new(),
            Some(_) => string_field("source")?,
        };
        posts.push(validated(index, RawPost { id, text, label, source })?);
    }
    Ok(posts)
}

pub fn parse_csv(content: &str) -> Result<Vec<RawPost>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col, label_col, source_col) =
        (column("id"), column("text"), column("label"), column("source"));

    let mut posts = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed {
            index,
            message: e.to_string(),
        })?;
        let field = |col: Option<usize>, name: &'static str| -> Result<String> {
            col.and_then(|c| record.get(c))
                .map(str::to_string)
                .ok_or(Error::MissingField { index, field: name })
        };
        let id = field(id_col, "id")?;
        let text = field(text_col, "text")?;
        let label = parse_label(index, field(label_col, "label")?.trim())?;
        let source = source_col
            .and_then(|c| record.get(c))
            .unwrap_or_default()
            .to_string();
        posts.push(validated(index, RawPost { id, text, label, source })?);
    }
    Ok(posts)
}

fn json_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_label(index: usize, raw: &str) -> Result<Label> {
    match raw {
        "0" => Ok(Label::Control),
        "1" => Ok(Label::Target),
        _ => Err(Error::InvalidLabel {
            index,
            value: raw.to_string(),
        }),
    }
}

fn validated(index: usize, post: RawPost) -> Result<RawPost> {
    if post.id.is_empty() {
        return Err(Error::Malformed {
            index,
            message: "empty id".into(),
        });
    }
    Ok(post)
}

/// Write posts as JSONL (`id`, `text`, `label`, `source`), the same layout
/// [`ingest`] reads.
pub fn write_jsonl<'a, W: Write>(out: &mut W, posts: impl IntoIterator<Item = &'a RawPost>) -> std::io::Result<()> {
    for post in posts {
        serde_json::to_writer(&mut *out, post)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn default_unicode_map() -> BTreeMap<char, String> {
    [
        ('\u{2019}', "'"),
        ('\u{2018}', "'"),
        ('\u{201C}', "\""),
        ('\u{201D}', "\""),
        ('\u{2014}', "-"),
        ('\u{2013}', "-"),
    ]
    .into_iter()
    .map(|(c, s)| (c, s.to_string()))
    .collect()
}

/// Lowercase `text` and replace mapped punctuation with its ASCII form.
pub fn normalize_text(text: &str, unicode_map: &BTreeMap<char, String>) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match unicode_map.get(&c) {
            Some(replacement) => out.push_str(replacement),
            None => out.extend(c.to_lowercase()),
        }
    }
    out
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte ranges of tokens: maximal runs of letters and digits, joined by
/// apostrophes that sit between two such characters.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let joins = c == '\''
            && start.is_some()
            && chars.get(i + 1).is_some_and(|&(_, next)| is_token_char(next));
        if is_token_char(c) || joins {
            start.get_or_insert(pos);
        } else if let Some(s) = start.take() {
            spans.push((s, pos));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect()
}

fn is_closer(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split after each run of `.`, `!`, `?` and at line breaks.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    let flush = |current: &mut String, sentences: &mut Vec<String>| {
        let trimmed = current.trim();
        if !trimmed.is_empty() {
            sentences.push(trimmed.to_string());
        }
        current.clear();
    };
    while let Some(c) = chars.next() {
        if c == '\n' || c == '\r' {
            flush(&mut current, &mut sentences);
            continue;
        }
        current.push(c);
        if is_closer(c) && !chars.peek().copied().is_some_and(is_closer) {
            flush(&mut current, &mut sentences);
        }
    }
    flush(&mut current, &mut sentences);
    sentences
}

/// A preprocessed post with cached tokens and sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Post {
    id: String,
    text: String,
    label: Label,
    source: String,
    tokens: Vec<String>,
    sentences: Vec<String>,
}

impl Post {
    /// Build a post from already-normalized text.
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label, source: impl Into<String>) -> Self {
        let text = text.into();
        Post {
            id: id.into(),
            tokens: tokenize(&text),
            sentences: segment_sentences(&text),
            text,
            label,
            source: source.into(),
        }
    }

    /// Same post with a different text; tokens and sentences are recomputed.
    pub fn with_text(&self, text: String) -> Self {
        Post::new(self.id.clone(), text, self.label, self.source.clone())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn to_raw(&self) -> RawPost {
        RawPost::new(self.id.clone(), self.text.clone(), self.label, self.source.clone())
    }
}

/// Ordered, read-only collection of preprocessed posts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    posts: Vec<Post>,
}

impl Corpus {
    pub fn from_posts(posts: Vec<Post>) -> Self {
        Corpus { posts }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.posts.iter().map(Post::label).collect()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.posts.iter().filter(|p| p.label == label).count()
    }

    pub fn to_raw(&self) -> Vec<RawPost> {
        self.posts.iter().map(Post::to_raw).collect()
    }

    pub fn map_posts(&self, f: impl FnMut(&Post) -> Post) -> Corpus {
        Corpus {
            posts: self.posts.iter().map(f).collect(),
        }
    }
}

/// Which posts must contain a first-person token.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstPersonRule {
    #[default]
    Never,
    Always,
    /// Only posts whose `source` is in the set.
    Sources(BTreeSet<String>),
}

impl FirstPersonRule {
    fn applies_to(&self, source: &str) -> bool {
        match self {
            FirstPersonRule::Never => false,
            FirstPersonRule::Always => true,
            FirstPersonRule::Sources(sources) => sources.contains(source),
        }
    }
}

pub fn default_first_person_set() -> BTreeSet<String> {
    [
        "i", "i'm", "i've", "i'd", "i'll", "me", "my", "mine", "myself", "we", "us", "our",
        "ours", "ourselves",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

fn default_min_words() -> usize {
    10
}

fn default_url_markers() -> Vec<String> {
    vec!["http".to_string()]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub min_words: usize,
    pub url_markers: Vec<String>,
    pub require_first_person: FirstPersonRule,
    pub first_person_set: BTreeSet<String>,
    pub unicode_map: BTreeMap<char, String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_words: default_min_words(),
            url_markers: default_url_markers(),
            require_first_person: FirstPersonRule::Never,
            first_person_set: default_first_person_set(),
            unicode_map: default_unicode_map(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words < 1 {
            return Err(Error::Config("min_words must be at least 1".into()));
        }
        if self.url_markers.is_empty() || self.url_markers.iter().any(String::is_empty) {
            return Err(Error::Config("url_markers must be a nonempty list of nonempty strings".into()));
        }
        Ok(())
    }
}

/// Per-filter rejection counts. Each rejected post is counted once, under the
/// first filter it fails (URL, then length, then first person).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionSummary {
    pub input: usize,
    pub kept: usize,
    pub url: usize,
    pub too_short: usize,
    pub no_first_person: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    pub corpus: Corpus,
    pub rejections: RejectionSummary,
}

pub fn preprocess(posts: &[RawPost], cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let mut rejections = RejectionSummary {
        input: posts.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for raw in posts {
        let text = normalize_text(&raw.text, &cfg.unicode_map);
        if cfg.url_markers.iter().any(|m| text.contains(m.as_str())) {
            rejections.url += 1;
            continue;
        }
        let post = Post::new(raw.id.clone(), text, raw.label, raw.source.clone());
        if post.tokens.len() < cfg.min_words {
            rejections.too_short += 1;
            continue;
        }
        if cfg.require_first_person.applies_to(&post.source)
            && !post.tokens.iter().any(|t| cfg.first_person_set.contains(t))
        {
            rejections.no_first_person += 1;
            continue;
        }
        kept.push(post);
    }
    rejections.kept = kept.len();
    Ok(Preprocessed {
        corpus: Corpus::from_posts(kept),
        rejections,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Corpus,
    pub validation: Corpus,
}

fn round_half_up(x: f64) -> usize {
    // The epsilon absorbs representation error such as 0.7 * 5 = 3.4999...
    (x + 0.5 + 1e-9).floor() as usize
}

/// Number of posts of a label that go to the training side.
pub fn train_count(total: usize, train_fraction: f64) -> usize {
    round_half_up(train_fraction * total as f64).min(total)
}

/// Stratified train/validation split. Per label, a seeded shuffle picks which
/// posts go to train; both sides keep the corpus order.
pub fn stratified_split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if Label::ALL.iter().any(|&l| corpus.count_label(l) == 0) {
        return Err(Error::CannotStratify(
            "corpus must contain both labels".into(),
        ));
    }
    let mut in_train = vec![false; corpus.len()];
    for label in Label::ALL {
        let mut members: Vec<usize> = corpus
            .posts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == label)
            .map(|(i, _)| i)
            .collect();
        let n_train = train_count(members.len(), train_fraction);
        let mut rng = rng::substream(seed, &format!("split/label-{label}"));
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, validation): (Vec<_>, Vec<_>) = corpus
        .posts
        .iter()
        .zip(&in_train)
        .partition(|(_, &t)| t);
    let collect = |side: Vec<(&Post, &bool)>| Corpus::from_posts(side.into_iter().map(|(p, _)| p.clone()).collect());
    Ok(Split {
        train: collect(train),
        validation: collect(validation),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_posts: usize,
    pub avg_words: f64,
    pub max_words: usize,
    /// count(label 0) / count(label 1); absent when there are no label-1 posts.
    pub label_ratio: Option<f64>,
}

/// Label ratio control/target, `None` when there are no target posts.
pub fn label_ratio(n_control: usize, n_target: usize) -> Option<f64> {
    (n_target > 0).then(|| n_control as f64 / n_target as f64)
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::Config("cannot compute statistics of an empty corpus".into()));
    }
    let lengths: Vec<usize> = corpus.posts.iter().map(|p| p.tokens.len()).collect();
    let total: usize = lengths.iter().sum();
    Ok(CorpusStats {
        n_posts: corpus.len(),
        avg_words: total as f64 / corpus.len() as f64,
        max_words: lengths.iter().copied().max().unwrap_or(0),
        label_ratio: label_ratio(
            corpus.count_label(Label::Control),
            corpus.count_label(Label::Target),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, text: &str, label: u8) -> RawPost {
        RawPost::new(id, text, Label::try_from(label).unwrap(), "r/test")
    }

    fn corpus_with(n0: usize, n1: usize) -> Corpus {
        let posts = (0..n0)
            .map(|i| Post::new(format!("c{i}"), "x", Label::Control, ""))
            .chain((0..n1).map(|i| Post::new(format!("t{i}"), "y", Label::Target, "")))
            .collect();
        Corpus::from_posts(posts)
    }

    #[test]
    fn jsonl_single_record() {
        let posts = parse_jsonl(r#"{"id":"a","text":"hello world","label":0,"source":"r/cooking"}"#).unwrap();
        assert_eq!(posts, vec![RawPost::new("a", "hello world", Label::Control, "r/cooking")]);
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_jsonl("").unwrap().is_empty());
        assert!(parse_csv("id,text,label,source\n").unwrap().is_empty());
    }

    #[test]
    fn label_two_is_rejected() {
        let err = parse_jsonl(r#"{"id":"a","text":"t","label":2,"source":"s"}"#).unwrap_err();
        assert!(err.to_string().contains("invalid label"), "{err}");
        let err = parse_csv("id,text,label,source\na,t,2,s\n").unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { index: 0, .. }));
    }

    #[test]
    fn missing_field_names_record_and_field() {
        let input = "{\"id\":\"a\",\"text\":\"t\",\"label\":1}\n{\"id\":\"b\",\"label\":0}\n";
        match parse_jsonl(input).unwrap_err() {
            Error::MissingField { index, field } => {
                assert_eq!(index, 1);
                assert_eq!(field, "text");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_with_quoted_text() {
        let posts = parse_csv("id,text,label,source\nx,\"hi, there\",1,r/a\n").unwrap();
        assert_eq!(posts[0].text, "hi, there");
        assert_eq!(posts[0].label, Label::Target);
    }

    #[test]
    fn normalize_examples() {
        let map = default_unicode_map();
        assert_eq!(normalize_text("I\u{2019}m", &map), "i'm");
        assert_eq!(normalize_text("ABC", &map), "abc");
        assert_eq!(normalize_text("", &map), "");
        assert_eq!(normalize_text("\u{201C}Go\u{201D} \u{2014} now", &map), "\"go\" - now");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("i'm fine, thanks."), ["i'm", "fine", "thanks"]);
        assert_eq!(tokenize("a  b"), ["a", "b"]);
        assert_eq!(tokenize("2 years now"), ["2", "years", "now"]);
        assert_eq!(tokenize("'quoted' dogs' don't"), ["quoted", "dogs", "don't"]);
        assert!(tokenize("... !!").is_empty());
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(segment_sentences("a. b! c?"), ["a.", "b!", "c?"]);
        assert_eq!(segment_sentences("no terminator"), ["no terminator"]);
        assert_eq!(segment_sentences("x...\ny"), ["x...", "y"]);
        assert_eq!(segment_sentences("  \n\n wait?! ok  "), ["wait?!", "ok"]);
        assert!(segment_sentences("").is_empty());
    }

    #[test]
    fn filters() {
        let cfg = PreprocessConfig {
            require_first_person: FirstPersonRule::Sources(["r/ens".to_string()].into()),
            ..Default::default()
        };
        let ten = "one two three four five six seven eight nine ten";
        let nine = "one two three four five six seven eight nine";
        let posts = vec![
            raw("short", nine, 0),
            raw("url", &format!("{ten} see http://x.co"), 0),
            RawPost::new("ens-no-i", ten, Label::Target, "r/ens"),
            RawPost::new("ens-i", &format!("{ten} i"), Label::Target, "r/ens"),
            raw("ok", ten, 0),
        ];
        let out = preprocess(&posts, &cfg).unwrap();
        let ids: Vec<_> = out.corpus.posts().iter().map(Post::id).collect();
        assert_eq!(ids, ["ens-i", "ok"]);
        assert_eq!(
            out.rejections,
            RejectionSummary { input: 5, kept: 2, url: 1, too_short: 1, no_first_person: 1 }
        );
    }

    #[test]
    fn config_validation() {
        let cfg = PreprocessConfig { url_markers: vec![], ..Default::default() };
        assert!(preprocess(&[], &cfg).is_err());
        let cfg = PreprocessConfig { min_words: 0, ..Default::default() };
        assert!(preprocess(&[], &cfg).is_err());
    }

    #[test]
    fn split_exact_proportion() {
        let split = stratified_split(&corpus_with(60, 40), 0.7, 1).unwrap();
        assert_eq!(split.train.count_label(Label::Control), 42);
        assert_eq!(split.train.count_label(Label::Target), 28);
        assert_eq!(split.validation.len(), 30);
    }

    #[test]
    fn split_small_rounding() {
        // 0.7 * 3 = 2.1 -> 2 per label
        let split = stratified_split(&corpus_with(3, 3), 0.7, 9).unwrap();
        assert_eq!(split.train.count_label(Label::Control), 2);
        assert_eq!(split.train.count_label(Label::Target), 2);
        assert_eq!(split.validation.count_label(Label::Control), 1);
        assert_eq!(split.validation.count_label(Label::Target), 1);
        // 0.7 * 5 = 3.5 rounds half up
        assert_eq!(train_count(5, 0.7), 4);
        assert_eq!(train_count(1, 0.5), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let c = corpus_with(30, 20);
        assert_eq!(stratified_split(&c, 0.7, 5).unwrap(), stratified_split(&c, 0.7, 5).unwrap());
    }

    #[test]
    fn split_single_label_fails() {
        let err = stratified_split(&corpus_with(5, 0), 0.7, 0).unwrap_err();
        assert!(err.to_string().contains("cannot stratify"));
        assert!(stratified_split(&corpus_with(5, 5), 1.0, 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let c = Corpus::from_posts(vec![Post::new("p", "a b c d e f g", Label::Control, "")]);
        let s = corpus_stats(&c).unwrap();
        assert_eq!((s.n_posts, s.avg_words, s.max_words), (1, 7.0, 7));
        assert_eq!(s.label_ratio, None);
        assert!(corpus_stats(&Corpus::default()).is_err());

        let round2 = |x: f64| (x * 100.0).round() / 100.0;
        assert_eq!(round2(label_ratio(1650, 1076).unwrap()), 1.53);
        assert_eq!(round2(label_ratio(1110, 1076).unwrap()), 1.03);
    }
}
