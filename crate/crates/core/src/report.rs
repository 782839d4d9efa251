//! Experiment orchestration for the three evaluation phases and table
//! rendering.
//!
//! * Phase 1 trains every roster model and scores it on every test set.
//! * Phase 2 adds one row per topic-word manipulation, with the accuracy
//!   change and a paired t-test against the raw row.
//! * Phase 3 does the same for cross-post and within-post sentence shuffles.
//!
//! Evaluation is a pure function of the corpora, the config and the global
//! seed; only the `timestamp` metadata field varies between runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus, CorpusFormat, Label, PreprocessConfig};
use crate::error::{Error, Result};
use crate::features::{fit_feature_space, FeatureConfig, FeatureMode, FeatureSpace};
use crate::models::{
    AdapterClient, Classifier, ExternalClassifierHandle, LrConfig, NbConfig, SvmConfig, TrainerConfig,
};
use crate::perturb::{self, ManipulationKind, ShuffleKind, ShuffleSpec, WordList};
use crate::rng::{self, sha256_hex};
use crate::stats::{self, PairedSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSetSpec {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationSplit {
    pub train_fraction: f64,
    pub name: String,
}

impl Default for ValidationSplit {
    fn default() -> Self {
        ValidationSplit {
            train_fraction: 0.7,
            name: "validation".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    Nb(NbConfig),
    Lr(LrConfig),
    Svm(SvmConfig),
    External(ExternalClassifierHandle),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    /// Ignored for external models.
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ModelSpec {
    pub fn shallow(trainer: TrainerConfig, features: FeatureConfig) -> Self {
        let kind = match trainer {
            TrainerConfig::Nb(c) => ModelKind::Nb(c),
            TrainerConfig::Lr(c) => ModelKind::Lr(c),
            TrainerConfig::Svm(c) => ModelKind::Svm(c),
        };
        ModelSpec { name: None, features, kind }
    }

    pub fn external(name: impl Into<String>, handle: ExternalClassifierHandle) -> Self {
        ModelSpec {
            name: Some(name.into()),
            features: FeatureConfig::default(),
            kind: ModelKind::External(handle),
        }
    }

    /// Explicit name, or a label such as `NB(tfidf:5000)` / `SVM(unigram)`.
    pub fn display_name(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let family = match &self.kind {
            ModelKind::Nb(_) => "NB",
            ModelKind::Lr(_) => "LR",
            ModelKind::Svm(_) => "SVM",
            ModelKind::External(_) => return "external".to_string(),
        };
        let features = match (self.features.mode, self.features.max_terms) {
            (FeatureMode::Tfidf, Some(cap)) => format!("tfidf:{cap}"),
            (FeatureMode::Tfidf, None) => "tfidf".to_string(),
            (FeatureMode::Unigram, Some(cap)) => format!("unigram:{cap}"),
            (FeatureMode::Unigram, None) => "unigram".to_string(),
        };
        format!("{family}({features})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum WordListSource {
    /// Most frequent non-stopword training terms, optionally with variants.
    Extract {
        #[serde(default = "default_k")]
        k: usize,
        /// Defaults to a standard English stopword list.
        #[serde(default)]
        stopwords: Option<BTreeSet<String>>,
        #[serde(default = "default_true")]
        expand_variants: bool,
    },
    File { path: PathBuf },
    Terms { terms: Vec<String> },
}

fn default_k() -> usize {
    10
}

fn default_true() -> bool {
    true
}

impl Default for WordListSource {
    fn default() -> Self {
        WordListSource::Extract {
            k: default_k(),
            stopwords: None,
            expand_variants: true,
        }
    }
}

/// What the paired t-test compares per post.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    Correctness,
    Score,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: PathBuf,
    /// Hold out part of the training corpus as an extra (first) test set.
    #[serde(default)]
    pub validation_split: Option<ValidationSplit>,
    #[serde(default)]
    pub test_sets: Vec<TestSetSpec>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub word_list: WordListSource,
    #[serde(default)]
    pub word_manipulations: Vec<ManipulationKind>,
    #[serde(default)]
    pub shuffles: Vec<ShuffleKind>,
    #[serde(default)]
    pub pairing: Pairing,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&json)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Make relative corpus and word-list paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.train);
        self.test_sets.iter_mut().for_each(|t| fix(&mut t.path));
        if let WordListSource::File { path } = &mut self.word_list {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if self.test_sets.is_empty() && self.validation_split.is_none() {
            return Err(Error::Config("at least one test set (or a validation split) is required".into()));
        }
        let mut names = BTreeSet::new();
        for spec in &self.models {
            let name = spec.display_name();
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate model name {name:?}")));
            }
            if let ModelKind::External(handle) = &spec.kind {
                handle.validate()?;
            }
        }
        let mut sets = BTreeSet::new();
        let split_name = self.validation_split.as_ref().map(|s| s.name.clone());
        for name in self.test_sets.iter().map(|t| t.name.clone()).chain(split_name) {
            if !sets.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate test set name {name:?}")));
            }
        }
        for m in &self.word_manipulations {
            m.validate()?;
        }
        self.preprocess.validate()
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub test_set: String,
    /// `raw` or the manipulation name.
    pub condition: String,
    pub n: usize,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    /// Accuracy minus the matching raw row's accuracy.
    pub acc_diff: Option<f64>,
    #[serde(default, with = "crate::stats::float_repr::option")]
    pub t: Option<f64>,
    pub p: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

impl ReportRow {
    fn failed(model: &str, test_set: &str, condition: &str, n: usize, message: String) -> Self {
        ReportRow {
            model: model.to_string(),
            test_set: test_set.to_string(),
            condition: condition.to_string(),
            n,
            accuracy: None,
            f1: None,
            acc_diff: None,
            t: None,
            p: None,
            error: Some(message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub phase: u8,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Copy with the timestamp zeroed, for comparing runs.
    pub fn without_timestamp(&self) -> Self {
        let mut t = self.clone();
        t.metadata.timestamp = 0;
        t
    }
}

pub const RAW: &str = "raw";

/// Corpora loaded and preprocessed for an experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub train: Corpus,
    pub test_sets: Vec<(String, Corpus)>,
}

fn load_corpus(path: &Path, cfg: &PreprocessConfig) -> Result<Corpus> {
    let raw = corpus::ingest(path, CorpusFormat::from_path(path))?;
    Ok(corpus::preprocess(&raw, cfg)?.corpus)
}

impl Experiment {
    /// Validate the config and load every corpus before anything is trained.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let full_train = load_corpus(&config.train, &config.preprocess)?;
        let mut test_sets = Vec::new();
        for spec in &config.test_sets {
            test_sets.push((spec.name.clone(), load_corpus(&spec.path, &config.preprocess)?));
        }
        Self::from_corpora(config, full_train, test_sets)
    }

    /// Like [`Experiment::load`] for corpora already in memory. Paths in the
    /// config are not read.
    pub fn from_corpora(config: &ExperimentConfig, train: Corpus, mut test_sets: Vec<(String, Corpus)>) -> Result<Self> {
        config.validate()?;
        let train = match &config.validation_split {
            Some(split) => {
                let parts = corpus::stratified_split(&train, split.train_fraction, config.seed)?;
                test_sets.insert(0, (split.name.clone(), parts.validation));
                parts.train
            }
            None => train,
        };
        if train.is_empty() {
            return Err(Error::Config("training corpus is empty after preprocessing".into()));
        }
        if let Some((name, _)) = test_sets.iter().find(|(_, c)| c.is_empty()) {
            return Err(Error::Config(format!("test set {name:?} is empty after preprocessing")));
        }
        Ok(Experiment {
            config: config.clone(),
            train,
            test_sets,
        })
    }

    fn metadata(&self, phase: u8) -> ReportMetadata {
        ReportMetadata {
            phase,
            seed: self.config.seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config_hash: self.config.hash(),
        }
    }

    /// Train every shallow model and open every external adapter.
    pub fn build_evaluators(&self) -> Result<Vec<Evaluator>> {
        self.config
            .models
            .iter()
            .map(|spec| Evaluator::build(spec, &self.train, self.config.seed))
            .collect()
    }

    /// The configured word list; extraction and variant expansion use the
    /// training corpus.
    pub fn word_list(&self) -> Result<WordList> {
        match &self.config.word_list {
            WordListSource::Extract { k, stopwords, expand_variants } => {
                let stop = stopwords.clone().unwrap_or_else(perturb::default_stopwords);
                let base = perturb::extract_topic_words(&self.train, *k, &stop)?;
                if *expand_variants {
                    let vocab: BTreeSet<String> =
                        self.train.posts().iter().flat_map(|p| p.tokens().iter().cloned()).collect();
                    perturb::expand_variants(&base, &vocab)
                } else {
                    Ok(base)
                }
            }
            WordListSource::File { path } => WordList::load(path),
            WordListSource::Terms { terms } => WordList::user_supplied(terms.iter().map(|t| t.to_lowercase())),
        }
    }

    fn run_conditions(&self, phase: u8, conditions: &[(String, Condition)]) -> Result<ReportTable> {
        let mut evaluators = self.build_evaluators()?;
        let word_list = match conditions.iter().any(|(_, c)| matches!(c, Condition::Words(_))) {
            true => Some(self.word_list()?),
            false => None,
        };
        let mut rows = Vec::new();
        for evaluator in &mut evaluators {
            for (set_name, corpus) in &self.test_sets {
                let variants: Vec<(String, Corpus)> = conditions
                    .iter()
                    .map(|(name, cond)| (name.clone(), cond.apply(corpus, word_list.as_ref(), self.config.seed)))
                    .collect();
                rows.extend(evaluate_cell(evaluator, set_name, corpus, &variants, self.config.pairing)?);
            }
        }
        Ok(ReportTable {
            metadata: self.metadata(phase),
            rows,
        })
    }
}

enum Condition {
    Words(ManipulationKind),
    Shuffle(ShuffleKind),
}

impl Condition {
    fn apply(&self, corpus: &Corpus, words: Option<&WordList>, seed: u64) -> Corpus {
        match self {
            Condition::Words(kind) => perturb::manipulate_corpus(corpus, words.expect("word list resolved"), kind),
            Condition::Shuffle(kind) => perturb::apply_shuffle(corpus, &ShuffleSpec { kind: *kind, seed }),
        }
    }
}

/// A trained shallow model with its feature space, or a connection to an
/// external classifier.
pub enum Evaluator {
    Shallow {
        name: String,
        space: FeatureSpace,
        model: Classifier,
    },
    External {
        name: String,
        client: std::result::Result<AdapterClient, String>,
    },
}

impl Evaluator {
    /// Training failures abort with the model named; adapter failures are
    /// kept and reported per row.
    pub fn build(spec: &ModelSpec, train: &Corpus, seed: u64) -> Result<Self> {
        let name = spec.display_name();
        let trainer = match &spec.kind {
            ModelKind::External(handle) => {
                return Ok(Evaluator::External {
                    client: AdapterClient::connect(handle).map_err(|e| match e {
                        Error::Adapter { message, .. } => message,
                        other => other.to_string(),
                    }),
                    name,
                })
            }
            ModelKind::Nb(c) => TrainerConfig::Nb(c.clone()),
            ModelKind::Lr(c) => TrainerConfig::Lr(c.clone()),
            ModelKind::Svm(c) => TrainerConfig::Svm(SvmConfig {
                seed: rng::derive_seed(seed, &format!("model/{name}")),
                ..c.clone()
            }),
        };
        let wrap = |source: Error| Error::Model { model: name.clone(), source: Box::new(source) };
        let space = fit_feature_space(train, &spec.features).map_err(wrap)?;
        let model = trainer.train(&space.transform_corpus(train), &train.labels()).map_err(wrap)?;
        Ok(Evaluator::Shallow { name, space, model })
    }

    pub fn name(&self) -> &str {
        match self {
            Evaluator::Shallow { name, .. } | Evaluator::External { name, .. } => name,
        }
    }

    /// Predicted label and score for every post.
    pub fn evaluate(&mut self, corpus: &Corpus) -> Result<Vec<(Label, f64)>> {
        match self {
            Evaluator::Shallow { space, model, .. } => Ok(model
                .predict_all(&space.transform_corpus(corpus))?
                .into_iter()
                .map(|p| (p.label, p.score))
                .collect()),
            Evaluator::External { client, .. } => {
                let client = client
                    .as_mut()
                    .map_err(|message| Error::adapter(message.clone(), ""))?;
                let texts: Vec<String> = corpus.posts().iter().map(|p| p.text().to_string()).collect();
                Ok(client
                    .predict(&texts)?
                    .into_iter()
                    .map(|s| (if s >= 0.5 { Label::Target } else { Label::Control }, s))
                    .collect())
            }
        }
    }
}

struct Scored {
    ids: Vec<String>,
    predictions: Vec<(Label, f64)>,
}

impl Scored {
    fn labels(&self) -> Vec<Label> {
        self.predictions.iter().map(|p| p.0).collect()
    }

    fn paired_values(&self, truth: &[Label], pairing: Pairing) -> Vec<f64> {
        match pairing {
            Pairing::Correctness => stats::correctness(&self.labels(), truth),
            Pairing::Score => self.predictions.iter().map(|p| p.1).collect(),
        }
    }
}

/// Rows for one model on one test set: raw first, then each variant.
/// External-model failures become failed rows; shallow-model failures are
/// errors.
fn evaluate_cell(
    evaluator: &mut Evaluator,
    set_name: &str,
    raw: &Corpus,
    variants: &[(String, Corpus)],
    pairing: Pairing,
) -> Result<Vec<ReportRow>> {
    let model = evaluator.name().to_string();
    let external = matches!(evaluator, Evaluator::External { .. });
    let truth = raw.labels();
    let ids = |c: &Corpus| c.posts().iter().map(|p| p.id().to_string()).collect::<Vec<_>>();

    let mut score = |corpus: &Corpus| -> Result<std::result::Result<Scored, String>> {
        match evaluator.evaluate(corpus) {
            Ok(predictions) => Ok(Ok(Scored { ids: ids(corpus), predictions })),
            Err(e) if external => Ok(Err(e.to_string())),
            Err(e) => Err(Error::Model { model: model.clone(), source: Box::new(e) }),
        }
    };

    let mut rows = Vec::with_capacity(1 + variants.len());
    let base = match score(raw)? {
        Ok(base) => base,
        Err(message) => {
            rows.push(ReportRow::failed(&model, set_name, RAW, raw.len(), message.clone()));
            for (name, corpus) in variants {
                rows.push(ReportRow::failed(&model, set_name, name, corpus.len(), format!("raw evaluation failed: {message}")));
            }
            return Ok(rows);
        }
    };
    let base_metrics = stats::compute_metrics(&base.labels(), &truth)?;
    rows.push(ReportRow {
        model: model.clone(),
        test_set: set_name.to_string(),
        condition: RAW.to_string(),
        n: raw.len(),
        accuracy: Some(base_metrics.accuracy),
        f1: Some(base_metrics.f1),
        acc_diff: None,
        t: None,
        p: None,
        error: None,
    });

    for (name, corpus) in variants {
        let scored = match score(corpus)? {
            Ok(s) => s,
            Err(message) => {
                rows.push(ReportRow::failed(&model, set_name, name, corpus.len(), message));
                continue;
            }
        };
        let metrics = stats::compute_metrics(&scored.labels(), &truth)?;
        let series = PairedSeries::new(
            &base.ids,
            base.paired_values(&truth, pairing),
            &scored.ids,
            scored.paired_values(&truth, pairing),
        )?;
        let test = stats::paired_t_test(&series)?;
        rows.push(ReportRow {
            model: model.clone(),
            test_set: set_name.to_string(),
            condition: name.clone(),
            n: corpus.len(),
            accuracy: Some(metrics.accuracy),
            f1: Some(metrics.f1),
            acc_diff: Some(metrics.accuracy - base_metrics.accuracy),
            t: Some(test.t),
            p: Some(test.p),
            error: None,
        });
    }
    Ok(rows)
}

pub fn run_phase1(experiment: &Experiment) -> Result<ReportTable> {
    experiment.run_conditions(1, &[])
}

pub fn run_phase2(experiment: &Experiment) -> Result<ReportTable> {
    let conditions: Vec<(String, Condition)> = experiment
        .config
        .word_manipulations
        .iter()
        .map(|m| (m.name(), Condition::Words(m.clone())))
        .collect();
    if conditions.is_empty() {
        return Err(Error::Config("phase 2 needs at least one word manipulation".into()));
    }
    experiment.run_conditions(2, &conditions)
}

pub fn run_phase3(experiment: &Experiment) -> Result<ReportTable> {
    let conditions: Vec<(String, Condition)> = experiment
        .config
        .shuffles
        .iter()
        .map(|k| (k.to_string(), Condition::Shuffle(*k)))
        .collect();
    if conditions.is_empty() {
        return Err(Error::Config("phase 3 needs at least one shuffle".into()));
    }
    experiment.run_conditions(3, &conditions)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Csv,
    Markdown,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RenderFormat::Csv),
            "markdown" | "md" => Ok(RenderFormat::Markdown),
            "json" => Ok(RenderFormat::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl RenderFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RenderFormat::Csv => "csv",
            RenderFormat::Markdown => "md",
            RenderFormat::Json => "json",
        }
    }
}

/// Fraction as a percentage with one decimal, never `-0.0`.
pub fn format_percent(fraction: f64) -> String {
    let s = format!("{:.1}", fraction * 100.0);
    if s == "-0.0" { "0.0".to_string() } else { s }
}

pub fn format_t(t: f64) -> String {
    if t.is_infinite() {
        return if t > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{t:.2}");
    if s == "-0.00" { "0.00".to_string() } else { s }
}

pub fn format_p(p: f64) -> String {
    if p < 0.01 { "<0.01".to_string() } else { format!("{p:.2}") }
}

fn cells(row: &ReportRow) -> [String; 9] {
    let opt = |v: Option<f64>, f: fn(f64) -> String| v.map(f).unwrap_or_default();
    [
        row.model.clone(),
        row.test_set.clone(),
        row.condition.clone(),
        opt(row.accuracy, format_percent),
        opt(row.f1, |v| format!("{v:.2}")),
        opt(row.acc_diff, format_percent),
        opt(row.t, format_t),
        opt(row.p, format_p),
        match &row.error {
            Some(e) => format!("failed: {e}"),
            None => "ok".to_string(),
        },
    ]
}

pub fn render(table: &ReportTable, format: RenderFormat) -> Result<Vec<u8>> {
    if table.rows.is_empty() {
        return Err(Error::Config("cannot render an empty table".into()));
    }
    match format {
        RenderFormat::Json => {
            let mut out = serde_json::to_vec_pretty(table)?;
            out.push(b'\n');
            Ok(out)
        }
        RenderFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["model", "test_set", "condition", "accuracy", "f1", "acc_diff", "t", "p", "status"])?;
            for row in &table.rows {
                writer.write_record(cells(row))?;
            }
            writer
                .into_inner()
                .map_err(|e| Error::Config(format!("csv flush failed: {e}")))
        }
        RenderFormat::Markdown => Ok(render_markdown(table).into_bytes()),
    }
}

fn render_markdown(table: &ReportTable) -> String {
    let escape = |s: &str| s.replace('|', "\\|");
    let mut out = String::new();
    out.push_str("| Model | Testing Set | Manipulation | Acc (%) | F1 | AccDiff (%) | t-statistics | P-value | Status |\n");
    out.push_str("|---|---|---|---:|---:|---:|---:|---:|---|\n");
    let mut previous: Option<(&str, &str)> = None;
    for row in &table.rows {
        let mut c = cells(row).map(|s| escape(&s));
        // blank repeated group labels, as in a multirow table
        match previous {
            Some((m, _)) if m == row.model => {
                c[0].clear();
                if previous.is_some_and(|(_, s)| s == row.test_set) {
                    c[1].clear();
                }
            }
            _ => {}
        }
        previous = Some((&row.model, &row.test_set));
        let _ = writeln!(out, "| {} |", c.join(" | "));
    }
    let _ = writeln!(
        out,
        "\nseed {} · config {}",
        table.metadata.seed,
        &table.metadata.config_hash[..table.metadata.config_hash.len().min(12)]
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Post, RawPost};
    use crate::synth::{synthetic_posts, SynthConfig};

    fn synthetic(n: usize, seed: u64) -> Corpus {
        let raw = synthetic_posts(&SynthConfig { n_posts: n, seed, ..Default::default() });
        corpus::preprocess(&raw, &PreprocessConfig::default()).unwrap().corpus
    }

    fn config(models: Vec<ModelSpec>) -> ExperimentConfig {
        ExperimentConfig {
            train: "train.jsonl".into(),
            validation_split: Some(ValidationSplit::default()),
            test_sets: vec![],
            preprocess: PreprocessConfig::default(),
            models,
            word_list: WordListSource::default(),
            word_manipulations: vec![],
            shuffles: vec![],
            pairing: Pairing::Correctness,
            seed: 17,
            output_dir: None,
        }
    }

    fn nb_unigram() -> ModelSpec {
        ModelSpec::shallow(TrainerConfig::Nb(NbConfig::default()), FeatureConfig::unigram())
    }

    #[test]
    fn phase1_shape_and_determinism() {
        let cfg = config(vec![nb_unigram()]);
        let exp = Experiment::from_corpora(&cfg, synthetic(120, 1), vec![]).unwrap();
        let a = run_phase1(&exp).unwrap();
        assert_eq!(a.rows.len(), 1);
        let acc = a.rows[0].accuracy.unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert_eq!(a.rows[0].model, "NB(unigram)");
        let b = run_phase1(&exp).unwrap();
        let json = |t: &ReportTable| render(&t.without_timestamp(), RenderFormat::Json).unwrap();
        assert_eq!(json(&a), json(&b));
    }

    #[test]
    fn phase2_rows_and_no_op_manipulation() {
        let mut cfg = config(vec![nb_unigram()]);
        cfg.word_manipulations = vec![ManipulationKind::Remove, ManipulationKind::replace_with("nothing").unwrap()];
        cfg.word_list = WordListSource::Terms { terms: vec!["absentterm".into()] };
        let exp = Experiment::from_corpora(&cfg, synthetic(120, 2), vec![]).unwrap();
        let table = run_phase2(&exp).unwrap();
        assert_eq!(table.rows.len(), 3);
        for row in &table.rows[1..] {
            assert_eq!(row.acc_diff, Some(0.0));
            assert_eq!((row.t, row.p), (Some(0.0), Some(1.0)));
        }
        assert_eq!(table.rows[2].condition, "replace:nothing");
    }

    #[test]
    fn phase3_single_sentence_posts() {
        let posts: Vec<_> = (0..40)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Control } else { Label::Target };
                let word = if i % 2 == 0 { "calm" } else { "sad" };
                RawPost::new(format!("p{i}"), format!("{word} a b c d e f g h i j {i}"), label, "")
            })
            .collect();
        let train = corpus::preprocess(&posts, &PreprocessConfig::default()).unwrap().corpus;
        let mut cfg = config(vec![ModelSpec::shallow(TrainerConfig::Lr(LrConfig::default()), FeatureConfig::tfidf(None))]);
        cfg.shuffles = vec![ShuffleKind::CrossPost, ShuffleKind::WithinPost];
        let exp = Experiment::from_corpora(&cfg, train, vec![]).unwrap();
        let table = run_phase3(&exp).unwrap();
        let conditions: Vec<_> = table.rows.iter().map(|r| r.condition.as_str()).collect();
        assert_eq!(conditions, ["raw", "cross_post", "within_post"]);
        for row in &table.rows[1..] {
            assert_eq!(row.acc_diff, Some(0.0));
        }
    }

    #[test]
    fn training_failure_names_the_model() {
        let mut spec = ModelSpec::shallow(TrainerConfig::Lr(LrConfig { learning_rate: -1.0, ..Default::default() }), FeatureConfig::unigram());
        spec.name = Some("broken-lr".into());
        let exp = Experiment::from_corpora(&config(vec![spec]), synthetic(60, 3), vec![]).unwrap();
        let err = run_phase1(&exp).unwrap_err();
        assert!(err.to_string().contains("broken-lr"), "{err}");
    }

    #[test]
    fn unreachable_adapter_marks_rows_failed() {
        let handle = ExternalClassifierHandle::new(crate::models::Transport::Stdio {
            command: vec!["/nonexistent/adapter-binary".into()],
        });
        let mut cfg = config(vec![nb_unigram(), ModelSpec::external("BERT(128)", handle)]);
        cfg.shuffles = vec![ShuffleKind::WithinPost];
        let exp = Experiment::from_corpora(&cfg, synthetic(60, 4), vec![]).unwrap();
        let table = run_phase3(&exp).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.rows[..2].iter().all(|r| r.error.is_none()));
        assert!(table.rows[2..].iter().all(|r| r.error.is_some() && r.accuracy.is_none()));
    }

    #[test]
    fn config_validation() {
        assert!(config(vec![]).validate().is_err());
        let mut cfg = config(vec![nb_unigram(), nb_unigram()]);
        assert!(cfg.validate().is_err());
        cfg.models.pop();
        cfg.validation_split = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_shape() {
        let json = r#"{
            "train": "data/train.jsonl",
            "test_sets": [{"name": "ens", "path": "data/ens.jsonl"}],
            "models": [
                {"family": "nb", "features": {"mode": "unigram", "max_terms": null}},
                {"family": "svm", "lambda": 0.001, "features": {"mode": "tfidf", "max_terms": 5000}},
                {"name": "BERT(128)", "family": "external", "transport": "stdio", "command": ["python3", "adapter.py"]}
            ],
            "word_manipulations": [{"kind": "remove"}, {"kind": "replace"}],
            "shuffles": ["within_post", "cross_post"],
            "seed": 7
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.models[1].display_name(), "SVM(tfidf:5000)");
        assert_eq!(cfg.word_manipulations[1], ManipulationKind::Replace { replacement: "nothing".into() });
        match &cfg.models[2].kind {
            ModelKind::External(h) => assert_eq!(h.max_text_tokens, 128),
            other => panic!("unexpected {other:?}"),
        }
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_hash_tracks_every_field() {
        let base = config(vec![nb_unigram()]);
        let h = base.hash();
        let mutations: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.train = "other.jsonl".into()),
            Box::new(|c| c.validation_split = None),
            Box::new(|c| c.test_sets.push(TestSetSpec { name: "x".into(), path: "x.jsonl".into() })),
            Box::new(|c| c.preprocess.min_words = 11),
            Box::new(|c| c.models[0].features.max_terms = Some(10)),
            Box::new(|c| c.word_list = WordListSource::Terms { terms: vec!["a".into()] }),
            Box::new(|c| c.word_manipulations.push(ManipulationKind::Remove)),
            Box::new(|c| c.shuffles.push(ShuffleKind::WithinPost)),
            Box::new(|c| c.pairing = Pairing::Score),
            Box::new(|c| c.seed += 1),
            Box::new(|c| c.output_dir = Some("out".into())),
        ];
        for (i, mutate) in mutations.iter().enumerate() {
            let mut c = base.clone();
            mutate(&mut c);
            assert_ne!(c.hash(), h, "mutation {i} did not change the hash");
        }
        assert_eq!(base.clone().hash(), h);
    }

    fn row(condition: &str, p: Option<f64>) -> ReportRow {
        ReportRow {
            model: "BERT(128)".into(),
            test_set: "ENS-Dep".into(),
            condition: condition.into(),
            n: 10,
            accuracy: Some(0.962),
            f1: Some(0.9),
            acc_diff: p.map(|_| -0.011),
            t: p.map(|_| -2.0123),
            p,
            error: None,
        }
    }

    fn table(rows: Vec<ReportRow>) -> ReportTable {
        ReportTable {
            metadata: ReportMetadata { phase: 2, seed: 1, timestamp: 5, config_hash: "abc".into() },
            rows,
        }
    }

    #[test]
    fn csv_rendering() {
        let t = table(vec![row(RAW, None), row("remove", Some(0.003)), row("replace:nothing", Some(0.43))]);
        let csv = String::from_utf8(render(&t, RenderFormat::Csv).unwrap()).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "model,test_set,condition,accuracy,f1,acc_diff,t,p,status");
        assert_eq!(lines[1], "BERT(128),ENS-Dep,raw,96.2,0.90,,,,ok");
        assert_eq!(lines[2], "BERT(128),ENS-Dep,remove,96.2,0.90,-1.1,-2.01,<0.01,ok");
        assert!(lines[3].ends_with(",0.43,ok"));
    }

    #[test]
    fn csv_quotes_commas() {
        let mut r = row(RAW, None);
        r.model = "NB, tuned".into();
        let csv = String::from_utf8(render(&table(vec![r]), RenderFormat::Csv).unwrap()).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with("\"NB, tuned\","));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut r = row("within_post", Some(1.0 / 3.0));
        r.t = Some(f64::NEG_INFINITY);
        let t = table(vec![row(RAW, None), r]);
        let json = render(&t, RenderFormat::Json).unwrap();
        let back = ReportTable::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn markdown_groups_rows() {
        let t = table(vec![row(RAW, None), row("remove", Some(0.2))]);
        let md = String::from_utf8(render(&t, RenderFormat::Markdown).unwrap()).unwrap();
        let lines: Vec<_> = md.lines().collect();
        assert!(lines[2].starts_with("| BERT(128) | ENS-Dep | raw |"));
        assert!(lines[3].starts_with("|  |  | remove |"), "{}", lines[3]);
    }

    #[test]
    fn render_errors() {
        assert!(render(&table(vec![]), RenderFormat::Csv).is_err());
        assert!(matches!("xml".parse::<RenderFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn number_formats() {
        assert_eq!(format_percent(-0.0001), "0.0");
        assert_eq!(format_percent(0.9949), "99.5");
        assert_eq!(format_t(-0.001), "0.00");
        assert_eq!(format_p(0.0099), "<0.01");
        assert_eq!(format_p(0.01), "0.01");
        assert_eq!(format_p(1.0), "1.00");
    }

    #[test]
    fn empty_test_set_rejected() {
        let mut cfg = config(vec![nb_unigram()]);
        cfg.validation_split = None;
        cfg.test_sets = vec![TestSetSpec { name: "t".into(), path: "t.jsonl".into() }];
        let empty = Corpus::from_posts(vec![]);
        let train = Corpus::from_posts(vec![Post::new("a", "x y", Label::Control, ""), Post::new("b", "z", Label::Target, "")]);
        assert!(Experiment::from_corpora(&cfg, train, vec![("t".into(), empty)]).is_err());
    }
}
