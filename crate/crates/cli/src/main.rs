use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use narrprobe::corpus::{self, Corpus, CorpusFormat, Post, PreprocessConfig, RawPost};
use narrprobe::features::{fit_feature_space, FeatureConfig};
use narrprobe::models::{LrConfig, NbConfig, SvmConfig, TrainedModel, TrainerConfig};
use narrprobe::perturb::{self, ManipulationKind, ShuffleKind, ShuffleSpec, WordList};
use narrprobe::report::{self, Experiment, ExperimentConfig, RenderFormat, ReportTable};
use narrprobe::rng;

#[derive(Parser, Debug)]
#[command(name = "narrprobe", version, about = "Robustness evaluation for binary text classifiers")]
struct Cli {
    /// Global seed; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and filter a corpus, writing the kept posts as JSONL.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write the rejection summary as JSON to stderr.
        #[arg(long)]
        report_rejections: bool,
        /// Output file (default stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Post count, average and maximum length, and label ratio, as JSON.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Apply the preprocessing filters first.
        #[arg(long)]
        filter: bool,
    },
    /// Stratified train/validation split into train.jsonl and validation.jsonl.
    Split {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
    },
    /// Fit features and a shallow model; writes features.json and model.json.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = Family::Nb)]
        family: Family,
        #[arg(long, value_enum, default_value_t = Features::Tfidf)]
        features: Features,
        /// Vocabulary cap (tf-idf default 5000, unigram default uncapped).
        #[arg(long)]
        max_terms: Option<usize>,
    },
    /// Most frequent non-stopword terms of a training corpus.
    ExtractWords {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short, default_value_t = 10)]
        k: usize,
        /// Skip adding inflected variants found in the corpus.
        #[arg(long)]
        no_variants: bool,
    },
    /// Apply one word manipulation or shuffle to a corpus, writing JSONL.
    Perturb(PerturbArgs),
    /// Train every model and score it on every test set.
    Phase1,
    /// Raw versus word-manipulated test sets.
    Phase2,
    /// Raw versus sentence-shuffled test sets.
    Phase3,
    /// Render a JSON report as csv, markdown or json.
    Render {
        report: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Corpus file (.jsonl or .csv).
    input: PathBuf,
    /// Override format detection.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, conflicts_with = "shuffle", required_unless_present = "shuffle")]
    manipulation: Option<Manipulation>,
    #[arg(long, default_value = "nothing")]
    replacement_token: String,
    /// Word list file; required with --manipulation.
    #[arg(long, requires = "manipulation")]
    words: Option<PathBuf>,
    #[arg(long, value_enum)]
    shuffle: Option<Shuffle>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Nb,
    Lr,
    Svm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Features {
    Tfidf,
    Unigram,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Manipulation {
    Remove,
    Replace,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Shuffle {
    Within,
    Cross,
}

/// Bad invocation; exits with status 1 like a configuration error.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(err) = cause.downcast_ref::<narrprobe::Error>() {
            return if err.is_config_error() { 1 } else { 2 };
        }
    }
    2
}

struct Session {
    seed: Option<u64>,
    config: Option<ExperimentConfig>,
    out_dir: Option<PathBuf>,
}

impl Session {
    fn seed(&self) -> u64 {
        self.seed.or(self.config.as_ref().map(|c| c.seed)).unwrap_or(0)
    }

    fn preprocess(&self) -> PreprocessConfig {
        self.config.as_ref().map(|c| c.preprocess.clone()).unwrap_or_default()
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self
            .out_dir
            .clone()
            .or_else(|| self.config.as_ref().and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }

    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.config.clone().ok_or_else(|| usage("this command requires --config"))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Session { seed: cli.seed, config, out_dir: cli.out_dir };
    match cli.command {
        Command::Ingest { input, report_rejections, output } => {
            let raw = read_raw(&input)?;
            let pre = corpus::preprocess(&raw, &ctx.preprocess())?;
            if report_rejections {
                eprintln!("{}", serde_json::to_string(&pre.rejections)?);
            }
            write_corpus(&pre.corpus, output.as_deref())
        }
        Command::Stats { input, filter } => {
            let corpus = if filter { load_filtered(&ctx, &input)? } else { load_unfiltered(&input)? };
            println!("{}", serde_json::to_string_pretty(&corpus::corpus_stats(&corpus)?)?);
            Ok(())
        }
        Command::Split { input, train_fraction } => {
            let corpus = load_unfiltered(&input)?;
            let split = corpus::stratified_split(&corpus, train_fraction, ctx.seed())?;
            let dir = ctx.out_dir()?;
            write_corpus(&split.train, Some(&dir.join("train.jsonl")))?;
            write_corpus(&split.validation, Some(&dir.join("validation.jsonl")))?;
            println!("train {} validation {}", split.train.len(), split.validation.len());
            Ok(())
        }
        Command::Train { input, family, features, max_terms } => {
            let corpus = load_unfiltered(&input)?;
            let features = match features {
                Features::Tfidf => FeatureConfig::tfidf(Some(max_terms.unwrap_or(5000))),
                Features::Unigram => FeatureConfig { max_terms, ..FeatureConfig::unigram() },
            };
            let trainer = match family {
                Family::Nb => TrainerConfig::Nb(NbConfig::default()),
                Family::Lr => TrainerConfig::Lr(LrConfig::default()),
                Family::Svm => TrainerConfig::Svm(SvmConfig {
                    seed: rng::derive_seed(ctx.seed(), "train/svm"),
                    ..SvmConfig::default()
                }),
            };
            let space = fit_feature_space(&corpus, &features)?;
            let model = trainer.train(&space.transform_corpus(&corpus), &corpus.labels())?;
            let trained = TrainedModel::new(&space, model);
            let dir = ctx.out_dir()?;
            space.save(&dir.join("features.json"))?;
            trained.save(&dir.join("model.json"))?;
            println!("{}", trained.fingerprint());
            Ok(())
        }
        Command::ExtractWords { input, k, no_variants } => {
            let corpus = load_unfiltered(&input)?;
            let base = perturb::extract_topic_words(&corpus, k, &perturb::default_stopwords())?;
            let words = if no_variants {
                base
            } else {
                let vocab = corpus.posts().iter().flat_map(|p| p.tokens().iter().cloned()).collect();
                perturb::expand_variants(&base, &vocab)?
            };
            if words.short {
                eprintln!("warning: only {} eligible terms for k = {k}", words.terms.len());
            }
            match &ctx.out_dir {
                Some(_) => {
                    let path = ctx.out_dir()?.join("words.txt");
                    fs::write(&path, words.render()).with_context(|| format!("cannot write {}", path.display()))?;
                }
                None => print!("{}", words.render()),
            }
            Ok(())
        }
        Command::Perturb(args) => perturb_command(&ctx, args),
        Command::Phase1 => phase(&ctx, 1),
        Command::Phase2 => phase(&ctx, 2),
        Command::Phase3 => phase(&ctx, 3),
        Command::Render { report, format } => {
            let format: RenderFormat = format.parse()?;
            let json = fs::read_to_string(&report).map_err(|e| narrprobe::Error::io(&report, e))?;
            let table = ReportTable::from_json(&json)?;
            io::stdout().write_all(&report::render(&table, format)?)?;
            Ok(())
        }
    }
}

fn perturb_command(ctx: &Session, args: PerturbArgs) -> Result<()> {
    let corpus = load_unfiltered(&args.input)?;
    let out = match (args.manipulation, args.shuffle) {
        (Some(m), None) => {
            let path = args.words.as_deref().ok_or_else(|| usage("--manipulation requires --words"))?;
            let words = WordList::load(path)?;
            let kind = match m {
                Manipulation::Remove => ManipulationKind::Remove,
                Manipulation::Replace => ManipulationKind::replace_with(args.replacement_token)?,
            };
            perturb::manipulate_corpus(&corpus, &words, &kind)
        }
        (None, Some(s)) => {
            let kind = match s {
                Shuffle::Within => ShuffleKind::WithinPost,
                Shuffle::Cross => ShuffleKind::CrossPost,
            };
            perturb::apply_shuffle(&corpus, &ShuffleSpec { kind, seed: ctx.seed() })
        }
        _ => bail!(usage("give exactly one of --manipulation or --shuffle")),
    };
    write_corpus(&out, args.output.as_deref())
}

fn phase(ctx: &Session, n: u8) -> Result<()> {
    let cfg = ctx.experiment_config()?;
    let experiment = Experiment::load(&cfg)?;
    let table = match n {
        1 => report::run_phase1(&experiment)?,
        2 => report::run_phase2(&experiment)?,
        _ => report::run_phase3(&experiment)?,
    };
    let dir = ctx.out_dir()?;
    for format in [RenderFormat::Json, RenderFormat::Csv, RenderFormat::Markdown] {
        let path = dir.join(format!("phase{n}.{}", format.extension()));
        fs::write(&path, report::render(&table, format)?).with_context(|| format!("cannot write {}", path.display()))?;
    }
    io::stdout().write_all(&report::render(&table, RenderFormat::Markdown)?)?;
    Ok(())
}

fn read_raw(input: &InputArgs) -> Result<Vec<RawPost>> {
    let format = match input.format {
        Some(Format::Jsonl) => CorpusFormat::Jsonl,
        Some(Format::Csv) => CorpusFormat::Csv,
        None => CorpusFormat::from_path(&input.input),
    };
    Ok(corpus::ingest(&input.input, format)?)
}

fn load_filtered(ctx: &Session, input: &InputArgs) -> Result<Corpus> {
    Ok(corpus::preprocess(&read_raw(input)?, &ctx.preprocess())?.corpus)
}

/// Normalized but not filtered; for corpora that were already ingested.
fn load_unfiltered(input: &InputArgs) -> Result<Corpus> {
    let map = corpus::default_unicode_map();
    Ok(Corpus::from_posts(
        read_raw(input)?
            .into_iter()
            .map(|r| Post::new(r.id, corpus::normalize_text(&r.text, &map), r.label, r.source))
            .collect(),
    ))
}

fn write_corpus(corpus: &Corpus, path: Option<&Path>) -> Result<()> {
    let raw = corpus.to_raw();
    match path {
        Some(path) => {
            let mut file = io::BufWriter::new(
                fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            );
            corpus::write_jsonl(&mut file, &raw)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            corpus::write_jsonl(&mut lock, &raw)?;
        }
    }
    Ok(())
}
