//! File helpers shared by the on-disk formats.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Writes `path` atomically: the content goes to a temporary file in the
/// same directory which is then renamed over the target.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Line reader that remembers the source path and the current 1-based line
/// number so parse errors can point at the offending line.
pub struct Lines<R> {
    path: PathBuf,
    inner: std::io::Lines<R>,
    line: usize,
}

impl Lines<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(path, BufReader::new(file)))
    }
}

impl<R: BufRead> Lines<R> {
    pub fn new(path: impl Into<PathBuf>, reader: R) -> Self {
        Self {
            path: path.into(),
            inner: reader.lines(),
            line: 0,
        }
    }

    pub fn line_number(&self) -> usize {
        self.line
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Next line, or `None` at end of input.
    pub fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(mut s)) => {
                self.line += 1;
                if s.ends_with('\r') {
                    s.pop();
                }
                Ok(Some(s))
            }
            Some(Err(e)) => Err(Error::io(self.path.clone(), e)),
        }
    }

    /// Next line; end of input is a parse error naming `what`.
    pub fn expect_line(&mut self, what: &str) -> Result<String> {
        match self.next_line()? {
            Some(s) => Ok(s),
            None => Err(self.error(format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Parse error at the current line.
    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path.clone(), self.line, msg)
    }
}

/// Fixed 17-significant-digit rendering used by model files.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
