use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use narrprobe::corpus::{self, RawPost};
use narrprobe::synth::{synthetic_posts, SynthConfig};
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_narrprobe");
const STUB: &str = env!("CARGO_BIN_EXE_stub-adapter");

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("narrprobe-cli-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_posts(path: &Path, posts: &[RawPost]) {
    let mut out = Vec::new();
    corpus::write_jsonl(&mut out, posts).unwrap();
    std::fs::write(path, out).unwrap();
}

fn synthetic(path: &Path, n: usize, seed: u64) {
    write_posts(path, &synthetic_posts(&SynthConfig { n_posts: n, seed, ..Default::default() }));
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["perturb", "x.jsonl"]).status.code(), Some(1));
    assert_eq!(run(&["phase1"]).status.code(), Some(1));
}

#[test]
fn ingest_filters_and_reports() {
    let dir = Scratch::new("ingest");
    let input = dir.path("in.jsonl");
    std::fs::write(
        &input,
        concat!(
            r#"{"id":"1","text":"I Can’t Sleep and my job is wearing me down every day","label":1,"source":"r/x"}"#, "\n",
            r#"{"id":"2","text":"see http://x.y for more about this thing that i found","label":0,"source":"r/y"}"#, "\n",
            r#"{"id":"3","text":"too short","label":0,"source":"r/y"}"#, "\n",
        ),
    )
    .unwrap();
    let out = run(&["ingest", s(&input), "--report-rejections"]);
    assert_eq!(out.status.code(), Some(0));
    let kept = corpus::parse_jsonl(&stdout(&out)).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].text, "i can't sleep and my job is wearing me down every day");
    let report: Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(report, json!({"input": 3, "kept": 1, "url": 1, "too_short": 1, "no_first_person": 0}));
}

#[test]
fn malformed_corpus_is_a_configuration_error() {
    let dir = Scratch::new("malformed");
    let input = dir.path("bad.jsonl");
    std::fs::write(&input, "{\"id\":\"1\",\"text\":\"x\",\"label\":2,\"source\":\"\"}\n").unwrap();
    let out = run(&["ingest", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("label"));
    assert_eq!(run(&["stats", s(&dir.path("missing.jsonl"))]).status.code(), Some(1));
}

#[test]
fn stats_split_train_and_words() {
    let dir = Scratch::new("workflow");
    let input = dir.path("all.jsonl");
    synthetic(&input, 100, 1);
    let stats: Value = serde_json::from_slice(&run(&["stats", s(&input)]).stdout).unwrap();
    assert_eq!(stats["n_posts"], 100);
    assert_eq!(stats["label_ratio"], 1.0);

    let out_dir = dir.path("out");
    let out = run(&["split", s(&input), "--seed", "4", "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let train = corpus::ingest(&out_dir.join("train.jsonl"), corpus::CorpusFormat::Jsonl).unwrap();
    let validation = corpus::ingest(&out_dir.join("validation.jsonl"), corpus::CorpusFormat::Jsonl).unwrap();
    assert_eq!((train.len(), validation.len()), (70, 30));

    let train_path = out_dir.join("train.jsonl");
    for family in ["nb", "lr", "svm"] {
        let model_dir = dir.path(family);
        let args = ["train", s(&train_path), "--family", family, "--seed", "4", "--out-dir", s(&model_dir)];
        let first = run(&args);
        assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
        let model: Value = serde_json::from_str(&std::fs::read_to_string(model_dir.join("model.json")).unwrap()).unwrap();
        assert_eq!(model["model"]["family"], family);
        assert_eq!(run(&args).stdout, first.stdout, "{family} training is not reproducible");
    }

    let words = stdout(&run(&["extract-words", s(&input), "-k", "3"]));
    assert_eq!(words.lines().count(), 3);
}

#[test]
fn training_on_one_label_is_a_runtime_failure() {
    let dir = Scratch::new("oneclass");
    let input = dir.path("one.jsonl");
    let posts: Vec<RawPost> = synthetic_posts(&SynthConfig { n_posts: 20, ..Default::default() })
        .into_iter()
        .filter(|p| p.label == corpus::Label::Control)
        .collect();
    write_posts(&input, &posts);
    let out = run(&["train", s(&input), "--out-dir", s(&dir.path("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn perturb_words_and_shuffles() {
    let dir = Scratch::new("perturb");
    let input = dir.path("t.jsonl");
    write_posts(
        &input,
        &[RawPost::new("t", "i have very good relationship with my friend.", corpus::Label::Target, "")],
    );
    let words = dir.path("words.txt");
    std::fs::write(&words, "# topic words\nrelationship\nfriend\n").unwrap();
    let text = |out: Output| corpus::parse_jsonl(&stdout(&out)).unwrap()[0].text.clone();
    assert_eq!(
        text(run(&["perturb", s(&input), "--manipulation", "remove", "--words", s(&words)])),
        "i have very good with my."
    );
    assert_eq!(
        text(run(&["perturb", s(&input), "--manipulation", "replace", "--words", s(&words)])),
        "i have very good nothing with my nothing."
    );
    let bad = run(&["perturb", s(&input), "--manipulation", "replace", "--replacement-token", "two words", "--words", s(&words)]);
    assert_eq!(bad.status.code(), Some(1));

    let many = dir.path("many.jsonl");
    synthetic(&many, 30, 2);
    let a = run(&["perturb", s(&many), "--shuffle", "cross", "--seed", "3"]);
    let b = run(&["perturb", s(&many), "--shuffle", "cross", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(corpus::parse_jsonl(&stdout(&a)).unwrap().len(), 30);
}

fn experiment(dir: &Scratch, external: Vec<Value>) -> PathBuf {
    synthetic(&dir.path("train.jsonl"), 200, 5);
    synthetic(&dir.path("test.jsonl"), 60, 6);
    let mut models = vec![json!({"family": "nb", "features": {"mode": "unigram", "max_terms": null}})];
    models.extend(external);
    let cfg = json!({
        "train": "train.jsonl",
        "test_sets": [{"name": "test", "path": "test.jsonl"}],
        "models": models,
        "word_list": {"source": "terms", "terms": ["topic0", "topic1"]},
        "word_manipulations": [{"kind": "remove"}, {"kind": "replace"}],
        "shuffles": ["cross_post", "within_post"],
        "seed": 1
    });
    let path = dir.path("experiment.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn phases_write_all_formats() {
    let dir = Scratch::new("phases");
    let cfg = experiment(&dir, vec![]);
    let out_dir = dir.path("reports");
    for phase in ["phase1", "phase2", "phase3"] {
        let out = run(&[phase, "--config", s(&cfg), "--out-dir", s(&out_dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        for ext in ["json", "csv", "md"] {
            assert!(out_dir.join(format!("{phase}.{ext}")).exists());
        }
    }
    let csv = std::fs::read_to_string(out_dir.join("phase2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let rendered = run(&["render", s(&out_dir.join("phase3.json")), "--format", "csv"]);
    assert_eq!(stdout(&rendered), std::fs::read_to_string(out_dir.join("phase3.csv")).unwrap());
    assert_eq!(run(&["render", s(&out_dir.join("phase3.json")), "--format", "xml"]).status.code(), Some(1));
}

#[test]
fn external_model_over_stdio() {
    let dir = Scratch::new("external");
    let cfg = experiment(
        &dir,
        vec![
            json!({"name": "echo", "family": "external", "transport": "stdio", "command": [STUB, "--echo-score", "0.9"], "batch_size": 7}),
            json!({"name": "missing", "family": "external", "transport": "stdio", "command": ["/nonexistent/adapter"]}),
        ],
    );
    let out_dir = dir.path("reports");
    let out = run(&["phase3", "--config", s(&cfg), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("phase3.json")).unwrap()).unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    let echo: Vec<&Value> = rows.iter().filter(|r| r["model"] == "echo").collect();
    // every text scores 0.9, so every post is called label 1
    assert!(echo.iter().all(|r| r["accuracy"] == 0.5 && r["error"].is_null()));
    assert_eq!(echo[1]["t"], 0.0);
    assert!(rows.iter().filter(|r| r["model"] == "missing").all(|r| r["error"].is_string()));
}

#[test]
fn stub_adapter_survives_bad_requests() {
    let mut child = Command::new(STUB)
        .args(["--echo-score", "0.25", "--max-tokens", "64"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let mut ask = |line: &str| -> Value {
        writeln!(stdin, "{line}").unwrap();
        serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap()
    };
    assert_eq!(ask(r#"{"op":"hello"}"#), json!({"name": "echo", "max_tokens": 64}));
    assert!(ask("{not json").get("error").is_some());
    assert_eq!(ask(r#"{"id":"x","op":"predict"}"#)["id"], "x");
    assert_eq!(ask(r#"{"id":"y","op":"predict","texts":["a","b"]}"#), json!({"id": "y", "scores": [0.25, 0.25]}));
    drop(stdin);
    assert!(child.wait().unwrap().success());
}
