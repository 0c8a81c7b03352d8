//! Output plumbing shared by the subcommands: provenance headers and
//! atomic file writes.

use std::io::Write;
use std::path::Path;

use threadfuse_core::{Error, Result};

/// Header comment lines for an output artifact: the tool version, the
/// subcommand, and its full canonicalized parameter set. Deliberately no
/// timestamps or hostnames, so reruns with identical flags produce
/// byte-identical files.
pub fn header(command: &str, params: &[(&str, String)]) -> Vec<String> {
    let flags = params
        .iter()
        .map(|(key, value)| format!("{key}={value}"))
        .collect::<Vec<_>>()
        .join(" ");
    vec![
        format!("threadfuse {} {command}", env!("CARGO_PKG_VERSION")),
        flags,
    ]
}

/// Render header lines as `# ` comments followed by a body.
pub fn with_header(lines: &[String], body: &str) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(body);
    out
}

/// Write a file atomically: the content lands under a temporary name in
/// the destination directory and is renamed into place, so a crash never
/// leaves a half-written artifact.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Read a text file, attaching the path to any I/O error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
