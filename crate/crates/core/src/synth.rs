//! Seeded synthetic corpora with planted topic words.
//!
//! Every post is a few sentences of uniformly drawn filler terms. Target
//! posts additionally carry `topic_per_post` distinct terms from a small
//! topic set, inserted at random positions, so a bag-of-words model can
//! separate the classes almost perfectly until those terms are removed.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::corpus::{Label, RawPost};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_posts: usize,
    pub n_filler: usize,
    pub n_topic: usize,
    pub topic_per_post: usize,
    pub sentences: (usize, usize),
    pub words_per_sentence: (usize, usize),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_posts: 2000,
            n_filler: 200,
            n_topic: 10,
            topic_per_post: 3,
            sentences: (3, 6),
            words_per_sentence: (4, 9),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn filler_terms(&self) -> Vec<String> {
        (0..self.n_filler).map(|i| format!("w{i:03}")).collect()
    }

    pub fn topic_terms(&self) -> Vec<String> {
        (0..self.n_topic).map(|i| format!("topic{i}")).collect()
    }
}

/// Posts alternate labels (even index control, odd index target).
pub fn synthetic_posts(cfg: &SynthConfig) -> Vec<RawPost> {
    let filler = cfg.filler_terms();
    let topics = cfg.topic_terms();
    let mut rng = rng::substream(cfg.seed, "synth/posts");
    (0..cfg.n_posts)
        .map(|i| {
            let label = if i % 2 == 1 { Label::Target } else { Label::Control };
            let n_sentences = rng.gen_range(cfg.sentences.0..=cfg.sentences.1);
            let lengths: Vec<usize> = (0..n_sentences)
                .map(|_| rng.gen_range(cfg.words_per_sentence.0..=cfg.words_per_sentence.1))
                .collect();
            let mut words: Vec<&str> = (0..lengths.iter().sum::<usize>())
                .map(|_| filler.choose(&mut rng).expect("filler vocabulary").as_str())
                .collect();
            if label == Label::Target {
                let picks = index::sample(&mut rng, topics.len(), cfg.topic_per_post.min(topics.len()));
                for k in picks.iter() {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, topics[k].as_str());
                }
            }
            // the first sentence absorbs the planted words
            let extra = words.len() - lengths.iter().sum::<usize>();
            let mut sentences = Vec::with_capacity(n_sentences);
            let mut rest = words.as_slice();
            for (s, len) in lengths.iter().enumerate() {
                let take = if s == 0 { len + extra } else { *len };
                let (head, tail) = rest.split_at(take);
                sentences.push(format!("{}.", head.join(" ")));
                rest = tail;
            }
            RawPost::new(format!("s{i:05}"), sentences.join(" "), label, "synthetic")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn planted_terms_only_in_targets() {
        let cfg = SynthConfig { n_posts: 50, ..Default::default() };
        let topics = cfg.topic_terms();
        for post in synthetic_posts(&cfg) {
            let planted = tokenize(&post.text).iter().filter(|t| topics.contains(t)).count();
            match post.label {
                Label::Target => assert_eq!(planted, 3),
                Label::Control => assert_eq!(planted, 0),
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig { n_posts: 20, seed: 4, ..Default::default() };
        assert_eq!(synthetic_posts(&cfg), synthetic_posts(&cfg));
    }
}
