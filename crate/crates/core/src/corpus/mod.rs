//! Corpus model and text analysis.
//!
//! A corpus is a flat list of forum messages, each belonging to a thread
//! and carrying its position within that thread. Threads are a derived
//! grouping; the message is the unit of retrieval.
//!
//! Three line-oriented file formats live here: the corpus itself (one
//! JSON object per line), queries (tab-separated id and text), and
//! relevance judgments (whitespace-separated TREC-style qrels). Parsers
//! report 1-based line numbers on failure and skip blank lines.

mod stem;

pub use stem::stem;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One forum message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub thread_id: String,
    pub message_id: String,
    /// Zero-based position of the message within its thread.
    pub position: u32,
    pub text: String,
}

/// A thread's messages, ordered by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub thread_id: String,
    pub messages: Vec<Message>,
}

/// One retrieval query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

/// Graded relevance judgments: query id to thread id to grade (0, 1, or 2).
///
/// Metrics binarize these (grade > 0 counts as relevant); the grades are
/// kept so judgment files survive a round-trip unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert one judgment. Returns false if the (query, thread) pair was
    /// already present (the existing grade is kept).
    pub fn insert(&mut self, query_id: &str, thread_id: &str, grade: u8) -> bool {
        let per_query = self.judgments.entry(query_id.to_string()).or_default();
        if per_query.contains_key(thread_id) {
            return false;
        }
        per_query.insert(thread_id.to_string(), grade);
        true
    }

    pub fn grade(&self, query_id: &str, thread_id: &str) -> Option<u8> {
        self.judgments.get(query_id)?.get(thread_id).copied()
    }

    pub fn is_relevant(&self, query_id: &str, thread_id: &str) -> bool {
        self.grade(query_id, thread_id).unwrap_or(0) > 0
    }

    /// Number of threads judged relevant (grade > 0) for a query.
    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map(|m| m.values().filter(|&&g| g > 0).count())
            .unwrap_or(0)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.judgments
            .iter()
            .flat_map(|(q, m)| m.iter().map(move |(t, &g)| (q.as_str(), t.as_str(), g)))
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

/// Lowercase and split on any non-alphanumeric character. No stopword
/// removal; digit-bearing tokens are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Full analysis chain: tokenize, then stem each token.
pub fn analyze(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| stem(t)).collect()
}

/// Group messages into threads. Threads are ordered by thread id and
/// messages within a thread by (position, message id).
pub fn group_threads(messages: &[Message]) -> Vec<Thread> {
    let mut by_thread: BTreeMap<&str, Vec<&Message>> = BTreeMap::new();
    for msg in messages {
        by_thread.entry(&msg.thread_id).or_default().push(msg);
    }
    by_thread
        .into_iter()
        .map(|(thread_id, mut members)| {
            members.sort_by(|a, b| {
                a.position
                    .cmp(&b.position)
                    .then_with(|| a.message_id.cmp(&b.message_id))
            });
            Thread {
                thread_id: thread_id.to_string(),
                messages: members.into_iter().cloned().collect(),
            }
        })
        .collect()
}

/// Parse a corpus: one JSON message object per line. Message ids must be
/// unique across the corpus and positions unique within each thread;
/// silently deduplicating either would corrupt experiment inputs.
pub fn parse_corpus(input: &str) -> Result<Vec<Message>> {
    let mut messages = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    let mut seen_slots = std::collections::HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let msg: Message = serde_json::from_str(line).map_err(|e| Error::CorpusParse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if !seen_ids.insert(msg.message_id.clone()) {
            return Err(Error::CorpusParse {
                line: idx + 1,
                msg: format!("duplicate message id {:?}", msg.message_id),
            });
        }
        if !seen_slots.insert((msg.thread_id.clone(), msg.position)) {
            return Err(Error::CorpusParse {
                line: idx + 1,
                msg: format!(
                    "duplicate position {} in thread {:?}",
                    msg.position, msg.thread_id
                ),
            });
        }
        messages.push(msg);
    }
    Ok(messages)
}

pub fn serialize_corpus(messages: &[Message]) -> String {
    let mut out = String::new();
    for msg in messages {
        out.push_str(&serde_json::to_string(msg).expect("message serializes"));
        out.push('\n');
    }
    out
}

/// Parse queries: `query_id<TAB>text` per line. Text may itself contain
/// tabs; only the first tab separates. Query ids must be unique.
pub fn parse_queries(input: &str) -> Result<Vec<Query>> {
    let mut queries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (query_id, text) = line.split_once('\t').ok_or_else(|| Error::QueryParse {
            line: idx + 1,
            msg: "expected query_id<TAB>text".to_string(),
        })?;
        if query_id.is_empty() {
            return Err(Error::QueryParse {
                line: idx + 1,
                msg: "empty query id".to_string(),
            });
        }
        if !seen.insert(query_id.to_string()) {
            return Err(Error::QueryParse {
                line: idx + 1,
                msg: format!("duplicate query id {query_id:?}"),
            });
        }
        queries.push(Query {
            query_id: query_id.to_string(),
            text: text.to_string(),
        });
    }
    Ok(queries)
}

pub fn serialize_queries(queries: &[Query]) -> String {
    let mut out = String::new();
    for q in queries {
        out.push_str(&q.query_id);
        out.push('\t');
        out.push_str(&q.text);
        out.push('\n');
    }
    out
}

/// Parse qrels: `query_id <ignored> thread_id grade` per line, whitespace
/// separated. The second column is conventionally 0 and is not
/// interpreted. Grades must be 0, 1, or 2; a repeated (query, thread)
/// pair is an error.
pub fn parse_qrels(input: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::QrelsParse { line: idx + 1, msg };
        if fields.len() != 4 {
            return Err(err(format!(
                "expected 4 whitespace-separated fields, found {}",
                fields.len()
            )));
        }
        let grade: u8 = fields[3]
            .parse()
            .map_err(|_| err(format!("invalid grade {:?}", fields[3])))?;
        if grade > 2 {
            return Err(err(format!("grade {grade} out of range 0..=2")));
        }
        if !qrels.insert(fields[0], fields[2], grade) {
            return Err(err(format!(
                "duplicate judgment for query {:?} thread {:?}",
                fields[0], fields[2]
            )));
        }
    }
    Ok(qrels)
}

pub fn serialize_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (query_id, thread_id, grade) in qrels.iter() {
        out.push_str(&format!("{query_id} 0 {thread_id} {grade}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("Hello, World!"), ["hello", "world"]);
        assert_eq!(tokenize("don't stop"), ["don", "t", "stop"]);
        assert_eq!(tokenize("a--b__c"), ["a", "b", "c"]);
        assert_eq!(tokenize("  \t\n "), Vec::<String>::new());
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_keeps_digits_and_unicode_letters() {
        assert_eq!(tokenize("Win32 API"), ["win32", "api"]);
        assert_eq!(tokenize("Café au lait"), ["café", "au", "lait"]);
    }

    #[test]
    fn analyze_stems_each_token() {
        assert_eq!(analyze("Running quickly"), ["run", "quickli"]);
        assert_eq!(analyze("ponies in the sky"), ["poni", "in", "the", "sky"]);
    }

    #[test]
    fn group_threads_orders_by_position() {
        let messages = vec![
            msg("t2", "m4", 0, "d"),
            msg("t1", "m3", 1, "c"),
            msg("t1", "m1", 0, "a"),
            msg("t1", "m2", 0, "b"),
        ];
        let threads = group_threads(&messages);
        assert_eq!(threads.len(), 2);
        assert_eq!(threads[0].thread_id, "t1");
        let ids: Vec<&str> = threads[0]
            .messages
            .iter()
            .map(|m| m.message_id.as_str())
            .collect();
        // equal positions fall back to message id order
        assert_eq!(ids, ["m1", "m2", "m3"]);
        assert_eq!(threads[1].thread_id, "t2");
    }

    #[test]
    fn parse_corpus_reads_jsonl() {
        let input = concat!(
            r#"{"thread_id":"t1","message_id":"m1","position":0,"text":"hello"}"#,
            "\n\n",
            r#"{"thread_id":"t1","message_id":"m2","position":1,"text":"world"}"#,
            "\n",
        );
        let messages = parse_corpus(input).unwrap();
        assert_eq!(messages.len(), 2);
        assert_eq!(messages[1].message_id, "m2");
        assert_eq!(messages[1].position, 1);
    }

    #[test]
    fn parse_corpus_reports_line_of_bad_json() {
        let input = concat!(
            r#"{"thread_id":"t1","message_id":"m1","position":0,"text":"ok"}"#,
            "\n",
            "not json\n",
        );
        match parse_corpus(input) {
            Err(Error::CorpusParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corpus parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_corpus_rejects_duplicate_message_id() {
        let input = concat!(
            r#"{"thread_id":"t1","message_id":"m1","position":0,"text":"a"}"#,
            "\n",
            r#"{"thread_id":"t2","message_id":"m1","position":0,"text":"b"}"#,
            "\n",
        );
        match parse_corpus(input) {
            Err(Error::CorpusParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn parse_corpus_rejects_duplicate_position_within_thread() {
        let input = concat!(
            r#"{"thread_id":"t1","message_id":"m1","position":0,"text":"a"}"#,
            "\n",
            r#"{"thread_id":"t1","message_id":"m2","position":0,"text":"b"}"#,
            "\n",
        );
        match parse_corpus(input) {
            Err(Error::CorpusParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected duplicate position error, got {other:?}"),
        }
        // the same position in different threads is fine
        let ok = concat!(
            r#"{"thread_id":"t1","message_id":"m1","position":0,"text":"a"}"#,
            "\n",
            r#"{"thread_id":"t2","message_id":"m2","position":0,"text":"b"}"#,
            "\n",
        );
        assert_eq!(parse_corpus(ok).unwrap().len(), 2);
    }

    #[test]
    fn parse_queries_splits_on_first_tab_only() {
        let queries = parse_queries("q1\tdatabase locks\nq2\ttabs\tin text\n").unwrap();
        assert_eq!(queries.len(), 2);
        assert_eq!(queries[0].query_id, "q1");
        assert_eq!(queries[1].text, "tabs\tin text");
    }

    #[test]
    fn parse_queries_rejects_missing_tab_and_duplicates() {
        assert!(matches!(
            parse_queries("q1 no tab here\n"),
            Err(Error::QueryParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_queries("q1\ta\nq1\tb\n"),
            Err(Error::QueryParse { line: 2, .. })
        ));
    }

    #[test]
    fn parse_qrels_reads_grades_and_ignores_second_column() {
        let qrels = parse_qrels("q1 0 t1 2\nq1 Q0 t2 0\nq2 0 t1 1\n").unwrap();
        assert_eq!(qrels.grade("q1", "t1"), Some(2));
        assert_eq!(qrels.grade("q1", "t2"), Some(0));
        assert!(!qrels.is_relevant("q1", "t2"));
        assert!(qrels.is_relevant("q2", "t1"));
        assert_eq!(qrels.relevant_count("q1"), 1);
        assert_eq!(qrels.relevant_count("missing"), 0);
    }

    #[test]
    fn parse_qrels_rejects_bad_lines() {
        assert!(matches!(
            parse_qrels("q1 0 t1\n"),
            Err(Error::QrelsParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_qrels("q1 0 t1 3\n"),
            Err(Error::QrelsParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_qrels("q1 0 t1 x\n"),
            Err(Error::QrelsParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_qrels("q1 0 t1 1\nq1 0 t1 2\n"),
            Err(Error::QrelsParse { line: 2, .. })
        ));
    }

    fn msg(thread_id: &str, message_id: &str, position: u32, text: &str) -> Message {
        Message {
            thread_id: thread_id.to_string(),
            message_id: message_id.to_string(),
            position,
            text: text.to_string(),
        }
    }

    fn id_strategy() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9]{0,8}"
    }

    proptest! {
        #[test]
        fn corpus_round_trip(
            texts in proptest::collection::vec(".*", 1..20),
        ) {
            let messages: Vec<Message> = texts
                .iter()
                .enumerate()
                .map(|(i, text)| msg(&format!("t{}", i / 3), &format!("m{i}"), (i % 3) as u32, text))
                .collect();
            let parsed = parse_corpus(&serialize_corpus(&messages)).unwrap();
            prop_assert_eq!(parsed, messages);
        }

        #[test]
        fn queries_round_trip(
            ids in proptest::collection::btree_set("[a-z0-9]{1,8}", 1..10),
            texts in proptest::collection::vec("[^\r\n]*", 10),
        ) {
            let queries: Vec<Query> = ids
                .iter()
                .zip(&texts)
                .map(|(id, text)| Query { query_id: id.clone(), text: text.clone() })
                .collect();
            let parsed = parse_queries(&serialize_queries(&queries)).unwrap();
            prop_assert_eq!(parsed, queries);
        }

        #[test]
        fn qrels_round_trip(
            entries in proptest::collection::btree_map(
                (id_strategy(), id_strategy()),
                0u8..=2,
                1..30,
            ),
        ) {
            let mut qrels = Qrels::new();
            for ((q, t), g) in &entries {
                qrels.insert(q, t, *g);
            }
            let parsed = parse_qrels(&serialize_qrels(&qrels)).unwrap();
            prop_assert_eq!(parsed, qrels);
        }

        #[test]
        fn tokenize_output_is_lowercase_alphanumeric(text in ".*") {
            for token in tokenize(&text) {
                prop_assert!(!token.is_empty());
                prop_assert!(token.chars().all(char::is_alphanumeric));
                prop_assert_eq!(token.to_lowercase(), token.clone());
            }
        }

        #[test]
        fn stem_never_lengthens_ascii_tokens(token in "[a-z]{1,20}") {
            prop_assert!(stem(&token).len() <= token.len() + 1);
        }
    }
}
