//! Inverted index over messages or over whole threads.
//!
//! Documents get dense ordinals assigned in ascending id order, so ordinal
//! comparisons agree with id comparisons. A message index keys documents by
//! message id; a virtual-document index concatenates each thread's messages
//! in position order and keys the result by thread id. Both flavors share
//! one on-disk layout, a directory of four little-endian binary sections
//! (see docs/index-format.md for the byte layout).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::corpus::{analyze, group_threads, Message};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TFIX";
const VERSION: u16 = 1;

const SECTION_META: u8 = 0;
const SECTION_POSTINGS: u8 = 1;
const SECTION_DOCLENS: u8 = 2;
const SECTION_DOCMETA: u8 = 3;

const FILE_NAMES: [&str; 4] = ["meta", "postings", "doclens", "docmeta"];

/// What one document of the index stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    /// One document per message.
    Messages,
    /// One document per thread (all messages concatenated in position order).
    VirtualDocs,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Messages => "messages",
            IndexKind::VirtualDocs => "virtual-docs",
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            IndexKind::Messages => 0,
            IndexKind::VirtualDocs => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(IndexKind::Messages),
            1 => Some(IndexKind::VirtualDocs),
            _ => None,
        }
    }
}

/// Term postings plus per-document metadata for one collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    kind: IndexKind,
    /// Document ids, ascending; the position is the document ordinal.
    doc_ids: Vec<String>,
    /// Owning thread id per document (equal to the id itself for
    /// virtual documents).
    doc_threads: Vec<String>,
    doc_lens: Vec<u64>,
    total_tokens: u64,
    /// Terms ascending; parallel to `postings`.
    terms: Vec<String>,
    /// Per term: (document ordinal, term frequency), ordinals ascending.
    postings: Vec<Vec<(u32, u32)>>,
    collection_freqs: Vec<u64>,
    term_lookup: HashMap<String, u32>,
}

/// Index every message as its own document.
pub fn build_index(messages: &[Message]) -> Result<Index> {
    let mut order: Vec<usize> = (0..messages.len()).collect();
    order.sort_by(|&a, &b| messages[a].message_id.cmp(&messages[b].message_id));
    for pair in order.windows(2) {
        if messages[pair[0]].message_id == messages[pair[1]].message_id {
            return Err(Error::InvalidParameter(format!(
                "duplicate message id {:?}",
                messages[pair[0]].message_id
            )));
        }
    }
    let docs = order
        .into_iter()
        .map(|i| {
            let m = &messages[i];
            (m.message_id.clone(), m.thread_id.clone(), analyze(&m.text))
        })
        .collect();
    Index::from_docs(IndexKind::Messages, docs)
}

/// Index every thread as one document. Member messages are analyzed in
/// position order and their token streams chained, which matches analyzing
/// the concatenated texts with any separator between them.
pub fn build_virtual_docs(messages: &[Message]) -> Result<Index> {
    let docs = group_threads(messages)
        .into_iter()
        .map(|thread| {
            let mut tokens = Vec::new();
            for m in &thread.messages {
                tokens.extend(analyze(&m.text));
            }
            (thread.thread_id.clone(), thread.thread_id, tokens)
        })
        .collect();
    Index::from_docs(IndexKind::VirtualDocs, docs)
}

impl Index {
    /// `docs` are (id, thread id, analyzed tokens), ids ascending and unique.
    fn from_docs(kind: IndexKind, docs: Vec<(String, String, Vec<String>)>) -> Result<Index> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if docs.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{} documents exceed the u32 ordinal space",
                docs.len()
            )));
        }
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_threads = Vec::with_capacity(docs.len());
        let mut doc_lens = Vec::with_capacity(docs.len());
        let mut total_tokens = 0u64;
        let mut by_term: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (ordinal, (id, thread_id, tokens)) in docs.into_iter().enumerate() {
            let mut freqs: BTreeMap<String, u32> = BTreeMap::new();
            for token in &tokens {
                *freqs.entry(token.clone()).or_insert(0) += 1;
            }
            for (term, tf) in freqs {
                by_term.entry(term).or_default().push((ordinal as u32, tf));
            }
            doc_lens.push(tokens.len() as u64);
            total_tokens += tokens.len() as u64;
            doc_ids.push(id);
            doc_threads.push(thread_id);
        }
        if total_tokens == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut terms = Vec::with_capacity(by_term.len());
        let mut postings = Vec::with_capacity(by_term.len());
        for (term, list) in by_term {
            terms.push(term);
            postings.push(list);
        }
        Ok(Index::assemble(
            kind,
            doc_ids,
            doc_threads,
            doc_lens,
            total_tokens,
            terms,
            postings,
        ))
    }

    fn assemble(
        kind: IndexKind,
        doc_ids: Vec<String>,
        doc_threads: Vec<String>,
        doc_lens: Vec<u64>,
        total_tokens: u64,
        terms: Vec<String>,
        postings: Vec<Vec<(u32, u32)>>,
    ) -> Index {
        let collection_freqs = postings
            .iter()
            .map(|list| list.iter().map(|&(_, tf)| tf as u64).sum())
            .collect();
        let term_lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Index {
            kind,
            doc_ids,
            doc_threads,
            doc_lens,
            total_tokens,
            terms,
            postings,
            collection_freqs,
            term_lookup,
        }
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn thread_id(&self, ordinal: u32) -> &str {
        &self.doc_threads[ordinal as usize]
    }

    pub fn doc_len(&self, ordinal: u32) -> u64 {
        self.doc_lens[ordinal as usize]
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn postings(&self, term: &str) -> Option<&[(u32, u32)]> {
        let &i = self.term_lookup.get(term)?;
        Some(&self.postings[i as usize])
    }

    /// Occurrences of a term in one document.
    pub fn term_freq(&self, term: &str, ordinal: u32) -> u32 {
        let Some(list) = self.postings(term) else {
            return 0;
        };
        match list.binary_search_by_key(&ordinal, |&(doc, _)| doc) {
            Ok(i) => list[i].1,
            Err(_) => 0,
        }
    }

    /// Total occurrences of a term across the collection.
    pub fn collection_freq(&self, term: &str) -> u64 {
        match self.term_lookup.get(term) {
            Some(&i) => self.collection_freqs[i as usize],
            None => 0,
        }
    }

    /// Background probability of a term: collection frequency over total
    /// token count. Zero for unseen terms.
    pub fn collection_prob(&self, term: &str) -> f64 {
        self.collection_freq(term) as f64 / self.total_tokens as f64
    }

    /// Write the index as four section files inside `dir`, creating the
    /// directory if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("meta"), self.encode_meta())?;
        fs::write(dir.join("postings"), self.encode_postings())?;
        fs::write(dir.join("doclens"), self.encode_doclens())?;
        fs::write(dir.join("docmeta"), self.encode_docmeta())?;
        Ok(())
    }

    fn preamble(&self, section: u8) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(section);
        buf.push(self.kind.to_byte());
        buf
    }

    fn encode_meta(&self) -> Vec<u8> {
        let mut buf = self.preamble(SECTION_META);
        buf.extend_from_slice(&(self.doc_ids.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.terms.len() as u32).to_le_bytes());
        buf.extend_from_slice(&self.total_tokens.to_le_bytes());
        buf
    }

    fn encode_postings(&self) -> Vec<u8> {
        let mut buf = self.preamble(SECTION_POSTINGS);
        buf.extend_from_slice(&(self.terms.len() as u32).to_le_bytes());
        for (term, list) in self.terms.iter().zip(&self.postings) {
            put_string(&mut buf, term);
            buf.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for &(doc, tf) in list {
                buf.extend_from_slice(&doc.to_le_bytes());
                buf.extend_from_slice(&tf.to_le_bytes());
            }
        }
        buf
    }

    fn encode_doclens(&self) -> Vec<u8> {
        let mut buf = self.preamble(SECTION_DOCLENS);
        buf.extend_from_slice(&(self.doc_lens.len() as u32).to_le_bytes());
        for &len in &self.doc_lens {
            buf.extend_from_slice(&len.to_le_bytes());
        }
        buf
    }

    fn encode_docmeta(&self) -> Vec<u8> {
        let mut buf = self.preamble(SECTION_DOCMETA);
        buf.extend_from_slice(&(self.doc_ids.len() as u32).to_le_bytes());
        for (id, thread) in self.doc_ids.iter().zip(&self.doc_threads) {
            put_string(&mut buf, id);
            put_string(&mut buf, thread);
        }
        buf
    }

    /// Load and fully validate an index directory written by `save`.
    pub fn load(dir: &Path) -> Result<Index> {
        let mut meta = Reader::open(dir, "meta")?;
        let kind = meta.preamble(SECTION_META, None)?;
        let n_docs = meta.u32()? as usize;
        let n_terms = meta.u32()? as usize;
        let total_tokens = meta.u64()?;
        meta.finish()?;

        let mut doclens = Reader::open(dir, "doclens")?;
        doclens.preamble(SECTION_DOCLENS, Some(kind))?;
        doclens.expect_count(n_docs, "document")?;
        let mut doc_lens = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            doc_lens.push(doclens.u64()?);
        }
        doclens.finish()?;

        let mut docmeta = Reader::open(dir, "docmeta")?;
        docmeta.preamble(SECTION_DOCMETA, Some(kind))?;
        docmeta.expect_count(n_docs, "document")?;
        let mut doc_ids: Vec<String> = Vec::with_capacity(n_docs);
        let mut doc_threads = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let id = docmeta.string()?;
            let thread = docmeta.string()?;
            if let Some(prev) = doc_ids.last() {
                if *prev >= id {
                    return Err(docmeta.invalid("document ids not strictly ascending"));
                }
            }
            if kind == IndexKind::VirtualDocs && id != thread {
                return Err(docmeta.invalid("virtual document id differs from its thread id"));
            }
            doc_ids.push(id);
            doc_threads.push(thread);
        }
        docmeta.finish()?;

        let mut postings_file = Reader::open(dir, "postings")?;
        postings_file.preamble(SECTION_POSTINGS, Some(kind))?;
        postings_file.expect_count(n_terms, "term")?;
        let mut terms: Vec<String> = Vec::with_capacity(n_terms);
        let mut postings = Vec::with_capacity(n_terms);
        let mut posted_tokens = 0u64;
        for _ in 0..n_terms {
            let term = postings_file.string()?;
            if let Some(prev) = terms.last() {
                if *prev >= term {
                    return Err(postings_file.invalid("terms not strictly ascending"));
                }
            }
            let n = postings_file.u32()? as usize;
            if n == 0 {
                return Err(postings_file.invalid("term with empty posting list"));
            }
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = postings_file.u32()?;
                let tf = postings_file.u32()?;
                if doc as usize >= n_docs {
                    return Err(postings_file.invalid("posting ordinal out of range"));
                }
                if tf == 0 {
                    return Err(postings_file.invalid("posting with zero frequency"));
                }
                if let Some(&(prev, _)) = list.last() {
                    if prev >= doc {
                        return Err(
                            postings_file.invalid("posting ordinals not strictly ascending")
                        );
                    }
                }
                posted_tokens += tf as u64;
                list.push((doc, tf));
            }
            terms.push(term);
            postings.push(list);
        }
        postings_file.finish()?;

        let summed: u64 = doc_lens.iter().sum();
        if summed != total_tokens {
            return Err(Error::IndexFormat(format!(
                "document lengths sum to {summed}, meta says {total_tokens} tokens"
            )));
        }
        if posted_tokens != total_tokens {
            return Err(Error::IndexFormat(format!(
                "postings carry {posted_tokens} tokens, meta says {total_tokens}"
            )));
        }
        if n_docs == 0 || total_tokens == 0 {
            return Err(Error::IndexFormat("index holds no tokens".to_string()));
        }
        Ok(Index::assemble(
            kind,
            doc_ids,
            doc_threads,
            doc_lens,
            total_tokens,
            terms,
            postings,
        ))
    }
}

fn put_string(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

/// Cursor over one section file; every shortfall or mismatch becomes a
/// format error naming the file.
struct Reader {
    buf: Vec<u8>,
    pos: usize,
    file: &'static str,
}

impl Reader {
    fn open(dir: &Path, file: &'static str) -> Result<Reader> {
        debug_assert!(FILE_NAMES.contains(&file));
        let buf = fs::read(dir.join(file))?;
        Ok(Reader { buf, pos: 0, file })
    }

    fn invalid(&self, msg: &str) -> Error {
        Error::IndexFormat(format!("{}: {}", self.file, msg))
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.invalid("unexpected end of file"));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?.to_vec();
        String::from_utf8(bytes).map_err(|_| self.invalid("string is not valid UTF-8"))
    }

    /// Check magic, version, section, and kind byte. Returns the kind;
    /// when `expected_kind` is given, it must match.
    fn preamble(&mut self, section: u8, expected_kind: Option<IndexKind>) -> Result<IndexKind> {
        if self.take(4)? != MAGIC {
            return Err(self.invalid("bad magic"));
        }
        let version = u16::from_le_bytes(self.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(self.invalid(&format!("unsupported version {version}")));
        }
        let got_section = self.take(1)?[0];
        if got_section != section {
            return Err(self.invalid(&format!("section byte {got_section}, expected {section}")));
        }
        let kind_byte = self.take(1)?[0];
        let kind = IndexKind::from_byte(kind_byte)
            .ok_or_else(|| self.invalid(&format!("unknown kind byte {kind_byte}")))?;
        if let Some(expected) = expected_kind {
            if kind != expected {
                return Err(self.invalid(&format!(
                    "kind {} does not match meta kind {}",
                    kind.name(),
                    expected.name()
                )));
            }
        }
        Ok(kind)
    }

    fn expect_count(&mut self, expected: usize, what: &str) -> Result<()> {
        let count = self.u32()? as usize;
        if count != expected {
            return Err(self.invalid(&format!(
                "{what} count {count} does not match meta count {expected}"
            )));
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.invalid("trailing bytes after expected end"));
        }
        Ok(())
    }
}
