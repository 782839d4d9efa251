#![allow(dead_code)]

use narrprobe::corpus::{self, Corpus, Label, Post, PreprocessConfig, RawPost};
use narrprobe::rng;
use narrprobe::synth::{synthetic_posts, SynthConfig};
use rand::seq::SliceRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "I", "my", "We", "friend", "Relationship", "job", "sleep", "tired", "happy", "don't",
    "can't", "it's", "Today", "anxious", "school", "night", "mom", "dad", "café", "naïve",
    "ÉCOLE", "42", "x2", "hope", "lost", "help", "walked", "walking", "walks", "the", "a",
    "\u{201C}quoted\u{201D}", "it\u{2019}s", "well\u{2014}maybe", "ok,", "(aside)", "émigré",
];

const CLOSERS: &[&str] = &[".", "!", "?", "...", "?!", "", ""];
const GAPS: &[&str] = &[" ", " ", " ", "\n", "  ", "\r\n", " \t"];

/// Messy raw text: mixed case, curly quotes, dashes, accents, irregular
/// whitespace, newlines, sometimes a URL or a very short post.
pub fn fuzz_text(rng: &mut impl Rng) -> String {
    let n_sentences = rng.gen_range(1..=6);
    let mut text = String::new();
    if rng.gen_bool(0.1) {
        text.push_str("  ");
    }
    for s in 0..n_sentences {
        let n_words = rng.gen_range(1..=9);
        for w in 0..n_words {
            if w > 0 {
                text.push_str(GAPS[..3].choose(rng).unwrap());
            }
            text.push_str(WORDS.choose(rng).unwrap());
        }
        text.push_str(CLOSERS.choose(rng).unwrap());
        if s + 1 < n_sentences {
            text.push_str(GAPS.choose(rng).unwrap());
        }
    }
    if rng.gen_bool(0.05) {
        text.push_str(" see HTTPS://example.com/x");
    }
    text
}

pub fn fuzz_raw_posts(seed: u64, n: usize) -> Vec<RawPost> {
    let mut rng = rng::substream(seed, "test/fuzz");
    (0..n)
        .map(|i| {
            let label = if rng.gen_bool(0.5) { Label::Target } else { Label::Control };
            RawPost::new(format!("f{i}"), fuzz_text(&mut rng), label, "fuzz")
        })
        .collect()
}

/// Fuzzed posts wrapped without filtering, so short and odd texts survive.
pub fn fuzz_corpus(seed: u64, n: usize) -> Corpus {
    let map = corpus::default_unicode_map();
    Corpus::from_posts(
        fuzz_raw_posts(seed, n)
            .into_iter()
            .map(|r| Post::new(r.id, corpus::normalize_text(&r.text, &map), r.label, r.source))
            .collect(),
    )
}

pub fn synthetic_corpus(n_posts: usize, seed: u64) -> Corpus {
    let raw = synthetic_posts(&SynthConfig { n_posts, seed, ..Default::default() });
    corpus::preprocess(&raw, &PreprocessConfig::default()).unwrap().corpus
}
