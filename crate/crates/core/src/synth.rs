//! Deterministic synthetic forum corpus.
//!
//! The generator writes a corpus, a query set, and graded judgments from
//! one seed, so experiments are reproducible end to end. The vocabulary
//! is `w0..wN`: words the analysis chain passes through unchanged, which
//! keeps the generated term statistics exactly as written.
//!
//! Structure: the vocabulary is cut into disjoint 8-word topic slices plus
//! a background remainder. Each thread gets a primary topic (round-robin,
//! so every topic is populated) and a random message count; the leading
//! `ceil(concentration * count)` messages are on-topic, at most one
//! following message may be on a secondary topic, and the rest are
//! background chatter. On-topic messages draw each token from the topic
//! slice with probability 0.6; all other tokens come from the background
//! sampler, which itself leaks a token from a random topic's slice with
//! small probability. Those leaks put topical words into otherwise
//! irrelevant threads, which is what makes ranking the threads nontrivial.
//!
//! Each query takes two distinct words from its target topic. Judgments:
//! grade 2 for threads whose primary topic matches, grade 1 for threads
//! that actually carry a secondary-topic message matching, and grade 0
//! for a sample of unrelated threads.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{serialize_corpus, serialize_qrels, serialize_queries, Message, Qrels, Query};
use crate::{Error, Result};

pub const WORDS_PER_TOPIC: usize = 8;
const MIN_BACKGROUND_WORDS: usize = 8;
const TOPIC_TOKEN_PROB: f64 = 0.6;
const LEAK_PROB: f64 = 0.2;
const MESSAGE_TOKENS: (usize, usize) = (8, 20);
const SECONDARY_TOPIC_PROB: f64 = 0.35;
const GRADE0_SAMPLES_PER_QUERY: usize = 20;
const QUERY_TERM_COUNT: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub threads: usize,
    /// Inclusive range of messages per thread.
    pub messages_per_thread: (usize, usize),
    pub vocab_size: usize,
    pub topics: usize,
    /// Fraction of each thread's messages that are on its primary topic,
    /// in (0, 1]; at least one message is always on topic.
    pub concentration: f64,
    pub queries: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 42,
            threads: 200,
            messages_per_thread: (4, 16),
            vocab_size: 500,
            topics: 10,
            concentration: 0.3,
            queries: 10,
        }
    }
}

/// The three generated artifacts, already in their file formats.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub corpus_jsonl: String,
    pub queries_tsv: String,
    pub qrels: String,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.threads == 0 || self.topics == 0 || self.queries == 0 {
            return fail("threads, topics, and queries must all be at least 1".to_string());
        }
        let (lo, hi) = self.messages_per_thread;
        if lo == 0 || lo > hi {
            return fail(format!("bad messages-per-thread range {lo}..={hi}"));
        }
        if !self.concentration.is_finite() || self.concentration <= 0.0 || self.concentration > 1.0
        {
            return fail(format!(
                "concentration must be in (0, 1], got {}",
                self.concentration
            ));
        }
        let needed = self.topics * WORDS_PER_TOPIC + MIN_BACKGROUND_WORDS;
        if self.vocab_size < needed {
            return Err(Error::VocabularyTooSmall {
                vocabulary: self.vocab_size,
                topics: self.topics,
                needed,
            });
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SynthCorpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let vocab: Vec<String> = (0..self.vocab_size).map(|i| format!("w{i}")).collect();
        let topic_words: Vec<&[String]> = (0..self.topics)
            .map(|t| &vocab[t * WORDS_PER_TOPIC..(t + 1) * WORDS_PER_TOPIC])
            .collect();
        let background = &vocab[self.topics * WORDS_PER_TOPIC..];

        let background_token = |rng: &mut ChaCha8Rng| -> &String {
            if rng.random_bool(LEAK_PROB) {
                let t = rng.random_range(0..self.topics);
                &topic_words[t][rng.random_range(0..WORDS_PER_TOPIC)]
            } else {
                &background[rng.random_range(0..background.len())]
            }
        };
        let compose = |rng: &mut ChaCha8Rng, topic: Option<usize>| -> String {
            let len = rng.random_range(MESSAGE_TOKENS.0..=MESSAGE_TOKENS.1);
            let mut tokens = Vec::with_capacity(len);
            for _ in 0..len {
                let word = match topic {
                    Some(t) if rng.random_bool(TOPIC_TOKEN_PROB) => {
                        &topic_words[t][rng.random_range(0..WORDS_PER_TOPIC)]
                    }
                    _ => background_token(rng),
                };
                tokens.push(word.as_str());
            }
            tokens.join(" ")
        };

        let (lo, hi) = self.messages_per_thread;
        let mut messages = Vec::new();
        let mut primary_topic = Vec::with_capacity(self.threads);
        let mut secondary_topic: Vec<Option<usize>> = Vec::with_capacity(self.threads);
        let mut msg_counter = 0usize;
        for ti in 0..self.threads {
            let topic = ti % self.topics;
            primary_topic.push(topic);
            let thread_id = format!("t{ti:05}");
            let count = rng.random_range(lo..=hi);
            let n_topical = ((self.concentration * count as f64).ceil() as usize).clamp(1, count);
            let wants_secondary =
                self.topics > 1 && count > n_topical && rng.random_bool(SECONDARY_TOPIC_PROB);
            let secondary = if wants_secondary {
                let mut t = rng.random_range(0..self.topics - 1);
                if t >= topic {
                    t += 1;
                }
                Some(t)
            } else {
                None
            };
            secondary_topic.push(secondary);
            for pos in 0..count {
                let text = if pos < n_topical {
                    compose(&mut rng, Some(topic))
                } else if pos == n_topical && secondary.is_some() {
                    compose(&mut rng, secondary)
                } else {
                    compose(&mut rng, None)
                };
                messages.push(Message {
                    thread_id: thread_id.clone(),
                    message_id: format!("m{msg_counter:06}"),
                    position: pos as u32,
                    text,
                });
                msg_counter += 1;
            }
        }

        let mut queries = Vec::new();
        let mut qrels = Qrels::new();
        for qi in 0..self.queries {
            let topic = qi % self.topics;
            let picks = sample(
                &mut rng,
                WORDS_PER_TOPIC,
                QUERY_TERM_COUNT.min(WORDS_PER_TOPIC),
            );
            let text = picks
                .iter()
                .map(|w| topic_words[topic][w].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let query_id = format!("q{qi:03}");
            queries.push(Query {
                query_id: query_id.clone(),
                text,
            });

            for ti in 0..self.threads {
                let thread_id = format!("t{ti:05}");
                if primary_topic[ti] == topic {
                    qrels.insert(&query_id, &thread_id, 2);
                } else if secondary_topic[ti] == Some(topic) {
                    qrels.insert(&query_id, &thread_id, 1);
                }
            }
            let unjudged: Vec<usize> = (0..self.threads)
                .filter(|&ti| primary_topic[ti] != topic && secondary_topic[ti] != Some(topic))
                .collect();
            let amount = GRADE0_SAMPLES_PER_QUERY.min(unjudged.len());
            for pick in sample(&mut rng, unjudged.len(), amount).iter() {
                qrels.insert(&query_id, &format!("t{:05}", unjudged[pick]), 0);
            }
        }

        Ok(SynthCorpus {
            corpus_jsonl: serialize_corpus(&messages),
            queries_tsv: serialize_queries(&queries),
            qrels: serialize_qrels(&qrels),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, parse_qrels, parse_queries, tokenize};
    use std::collections::BTreeMap;

    fn tiny_spec() -> SynthSpec {
        SynthSpec {
            seed: 7,
            threads: 12,
            messages_per_thread: (2, 5),
            vocab_size: 100,
            topics: 4,
            concentration: 0.5,
            queries: 4,
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = tiny_spec().generate().unwrap();
        let b = tiny_spec().generate().unwrap();
        assert_eq!(a, b);
        let c = SynthSpec {
            seed: 8,
            ..tiny_spec()
        }
        .generate()
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn outputs_parse_with_the_standard_parsers() {
        let out = tiny_spec().generate().unwrap();
        let messages = parse_corpus(&out.corpus_jsonl).unwrap();
        let queries = parse_queries(&out.queries_tsv).unwrap();
        let qrels = parse_qrels(&out.qrels).unwrap();

        let mut threads: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for m in &messages {
            threads.entry(&m.thread_id).or_default().push(m.position);
        }
        assert_eq!(threads.len(), 12);
        for (_, positions) in threads {
            let expected: Vec<u32> = (0..positions.len() as u32).collect();
            assert_eq!(positions, expected, "positions are contiguous from 0");
        }

        assert_eq!(queries.len(), 4);
        for q in &queries {
            let terms = tokenize(&q.text);
            assert_eq!(terms.len(), QUERY_TERM_COUNT);
            assert_ne!(terms[0], terms[1]);
            // every query has at least one fully relevant thread
            assert!(qrels.relevant_count(&q.query_id) >= 1);
        }
    }

    #[test]
    fn message_lengths_stay_in_range() {
        let out = tiny_spec().generate().unwrap();
        for m in parse_corpus(&out.corpus_jsonl).unwrap() {
            let n = tokenize(&m.text).len();
            assert!(
                (MESSAGE_TOKENS.0..=MESSAGE_TOKENS.1).contains(&n),
                "message of {n} tokens"
            );
        }
    }

    #[test]
    fn grades_follow_topic_structure() {
        let out = tiny_spec().generate().unwrap();
        let qrels = parse_qrels(&out.qrels).unwrap();
        let mut counts = [0usize; 3];
        for (_, _, grade) in qrels.iter() {
            counts[grade as usize] += 1;
        }
        // round-robin topics guarantee grade-2 threads for every query
        assert!(counts[2] >= 4);
        assert!(counts[0] > 0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SynthSpec {
            threads: 0,
            ..tiny_spec()
        }
        .validate()
        .is_err());
        assert!(SynthSpec {
            queries: 0,
            ..tiny_spec()
        }
        .validate()
        .is_err());
        assert!(SynthSpec {
            concentration: 0.0,
            ..tiny_spec()
        }
        .validate()
        .is_err());
        assert!(SynthSpec {
            concentration: 1.5,
            ..tiny_spec()
        }
        .validate()
        .is_err());
        assert!(SynthSpec {
            messages_per_thread: (3, 2),
            ..tiny_spec()
        }
        .validate()
        .is_err());
        match (SynthSpec {
            vocab_size: 30,
            ..tiny_spec()
        })
        .validate()
        {
            Err(Error::VocabularyTooSmall {
                vocabulary: 30,
                topics: 4,
                needed: 40,
            }) => {}
            other => panic!("expected vocabulary error, got {other:?}"),
        }
    }

    #[test]
    fn single_topic_corpora_never_have_secondary_messages() {
        let spec = SynthSpec {
            topics: 1,
            queries: 1,
            vocab_size: 40,
            ..tiny_spec()
        };
        let out = spec.generate().unwrap();
        let qrels = parse_qrels(&out.qrels).unwrap();
        for (_, _, grade) in qrels.iter() {
            assert_ne!(grade, 1);
        }
    }
}
