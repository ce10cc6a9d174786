//! Sparse text data format: one instance per line,
//! `<label> <index>:<value> <index>:<value> ...`, with optional trailing
//! `# comment`. Labels are integers. Multiclass files carry a sidecar
//! `<file>.labels` listing one tag per line; the integer label is the
//! 0-based line number of the tag.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{write_atomic, Lines};
use crate::sparse::SparseVector;
use crate::trainer::LabeledInstance;

fn parse_line(line: &str) -> std::result::Result<Option<(i64, SparseVector)>, String> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let mut parts = body.split_whitespace();
    let label_tok = parts.next().expect("non-empty line");
    let label: i64 = label_tok
        .strip_prefix('+')
        .unwrap_or(label_tok)
        .parse()
        .map_err(|_| format!("bad label '{label_tok}'"))?;
    let mut entries = Vec::new();
    for tok in parts {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| format!("expected index:value, found '{tok}'"))?;
        let i: usize = i.parse().map_err(|_| format!("bad index '{i}'"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad value '{v}'"))?;
        entries.push((i, v));
    }
    let x = SparseVector::from_unsorted(entries).map_err(|e| e.to_string())?;
    Ok(Some((label, x)))
}

/// Reads all instances. Blank and comment-only lines are skipped.
pub fn read_sparse_text(path: &Path) -> Result<Vec<(i64, SparseVector)>> {
    let mut lines = Lines::open(path)?;
    let mut out = Vec::new();
    while let Some(line) = lines.next_line()? {
        if let Some(inst) = parse_line(&line).map_err(|m| lines.error(m))? {
            out.push(inst);
        }
    }
    Ok(out)
}

pub fn format_instance(label: i64, x: &SparseVector) -> String {
    let mut s = label.to_string();
    for (i, v) in x.iter() {
        let _ = write!(s, " {i}:{v}");
    }
    s
}

pub fn write_sparse_text(path: &Path, data: &[(i64, SparseVector)]) -> Result<()> {
    write_atomic(path, |w| {
        for (label, x) in data {
            writeln!(w, "{}", format_instance(*label, x))?;
        }
        Ok(())
    })
}

/// Binary files use labels `1`/`+1` and `-1`.
pub fn read_binary(path: &Path) -> Result<Vec<LabeledInstance>> {
    read_sparse_text(path)?
        .into_iter()
        .enumerate()
        .map(|(row, (y, x))| {
            LabeledInstance::try_new(x, y as f64)
                .map_err(|e| Error::parse(path, row + 1, e.to_string()))
        })
        .collect()
}

pub fn write_binary(path: &Path, data: &[LabeledInstance]) -> Result<()> {
    let rows: Vec<_> = data
        .iter()
        .map(|d| (if d.is_positive() { 1 } else { -1 }, d.x.clone()))
        .collect();
    write_sparse_text(path, &rows)
}

pub fn labels_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".labels");
    PathBuf::from(p)
}

/// Writes tagged instances with integer labels plus the tag sidecar. Tags are
/// numbered in lexicographic order.
pub fn write_multiclass(path: &Path, data: &[(SparseVector, String)]) -> Result<()> {
    let mut tags: Vec<&str> = data.iter().map(|(_, t)| t.as_str()).collect();
    tags.sort_unstable();
    tags.dedup();
    let rows: Vec<_> = data
        .iter()
        .map(|(x, t)| (tags.binary_search(&t.as_str()).unwrap() as i64, x.clone()))
        .collect();
    write_atomic(&labels_path(path), |w| {
        for t in &tags {
            writeln!(w, "{t}")?;
        }
        Ok(())
    })?;
    write_sparse_text(path, &rows)
}

pub fn read_multiclass(path: &Path) -> Result<Vec<(SparseVector, String)>> {
    let side = labels_path(path);
    let mut lines = Lines::open(&side)?;
    let mut tags = Vec::new();
    while let Some(l) = lines.next_line()? {
        if l.trim().is_empty() {
            return Err(lines.error("empty tag"));
        }
        tags.push(l.trim().to_string());
    }
    read_sparse_text(path)?
        .into_iter()
        .enumerate()
        .map(|(row, (y, x))| {
            let tag = usize::try_from(y)
                .ok()
                .and_then(|i| tags.get(i))
                .ok_or_else(|| Error::parse(path, row + 1, format!("label {y} has no tag")))?;
            Ok((x, tag.clone()))
        })
        .collect()
}
