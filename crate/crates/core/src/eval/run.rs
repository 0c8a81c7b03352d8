//! TREC-style run files.
//!
//! One line per retrieved thread: `query_id Q0 thread_id rank score tag`,
//! whitespace separated, ranks 1-based and contiguous per query, scores
//! printed with six decimals. Lines starting with `#` are comments and
//! are ignored by the parser, which lets run files carry their own
//! provenance header without breaking downstream tools.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Query id to its thread ranking, best first.
pub type Run = BTreeMap<String, Vec<(String, f64)>>;

/// Render a run. Each comment becomes a `# ` line before the data.
pub fn format_run(run: &Run, tag: &str, comments: &[String]) -> String {
    let mut out = String::new();
    for comment in comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    for (query_id, ranking) in run {
        for (i, (thread_id, score)) in ranking.iter().enumerate() {
            out.push_str(&format!(
                "{query_id} Q0 {thread_id} {rank} {score:.6} {tag}\n",
                rank = i + 1
            ));
        }
    }
    out
}

/// Parse a run file. Lines may arrive in any order; each query's entries
/// are reassembled by rank, which must be exactly 1..=n with no gaps,
/// duplicate ranks, or duplicate threads. The second column and the tag
/// are not interpreted.
pub fn parse_run(input: &str) -> Result<Run> {
    // entry: (rank, thread, score, source line) so reassembly errors can
    // still point at a line
    let mut staged: BTreeMap<String, Vec<(usize, String, f64, usize)>> = BTreeMap::new();
    for (idx, line) in input.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::RunParse { line: idx + 1, msg };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(format!(
                "expected 6 whitespace-separated fields, found {}",
                fields.len()
            )));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| err(format!("invalid rank {:?}", fields[3])))?;
        if rank == 0 {
            return Err(err("rank 0 (ranks are 1-based)".to_string()));
        }
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| err(format!("invalid score {:?}", fields[4])))?;
        staged.entry(fields[0].to_string()).or_default().push((
            rank,
            fields[2].to_string(),
            score,
            idx + 1,
        ));
    }

    let mut run = Run::new();
    for (query_id, mut entries) in staged {
        entries.sort_by_key(|e| e.0);
        let mut ranking = Vec::with_capacity(entries.len());
        let mut threads = std::collections::HashSet::new();
        for (i, (rank, thread_id, score, line)) in entries.into_iter().enumerate() {
            if rank != i + 1 {
                return Err(Error::RunParse {
                    line,
                    msg: format!(
                        "query {query_id:?}: rank {rank} where {} was expected",
                        i + 1
                    ),
                });
            }
            if !threads.insert(thread_id.clone()) {
                return Err(Error::RunParse {
                    line,
                    msg: format!("query {query_id:?}: thread {thread_id:?} listed twice"),
                });
            }
            ranking.push((thread_id, score));
        }
        run.insert(query_id, ranking);
    }
    Ok(run)
}
