//! Shared setup for the benchmarks: one deterministic corpus, parsed and
//! indexed once per process.

use threadfuse_core::corpus::{parse_corpus, parse_queries};
use threadfuse_core::index::build_index;
use threadfuse_core::{Index, Message, Query, SynthSpec};

pub struct Fixture {
    pub messages: Vec<Message>,
    pub queries: Vec<Query>,
    pub index: Index,
}

pub fn fixture() -> Fixture {
    let spec = SynthSpec {
        seed: 77,
        threads: 400,
        queries: 10,
        ..SynthSpec::default()
    };
    let generated = spec.generate().expect("synth");
    let messages = parse_corpus(&generated.corpus_jsonl).expect("corpus");
    let queries = parse_queries(&generated.queries_tsv).expect("queries");
    let index = build_index(&messages).expect("index");
    Fixture {
        messages,
        queries,
        index,
    }
}
