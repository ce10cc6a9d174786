//! Candidate feature templates and the name-to-column feature space.
//!
//! Each candidate yields an unordered bag of context tokens (`ctx=<token>`
//! over both sides of the sentence), one value for each orthographic
//! predicate (`cap`, `all-low`, `all-cap1`, `all-cap2`), one length bucket
//! (`num-tokens=1`, `num-tokens=2`, `num-tokens>2`) and the always-on `dummy`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{write_atomic, Lines};
use crate::sparse::SparseVector;

/// A potential entity mention with its sentence context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub span: Vec<String>,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub gold: Option<String>,
}

impl Candidate {
    pub fn new(
        span: Vec<String>,
        left: Vec<String>,
        right: Vec<String>,
        gold: Option<String>,
    ) -> Result<Self> {
        if span.is_empty() {
            return Err(Error::Input("candidate span is empty".into()));
        }
        let all = span.iter().chain(&left).chain(&right);
        if let Some(bad) = all
            .into_iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Input(format!("invalid token '{bad}'")));
        }
        Ok(Self {
            span,
            left,
            right,
            gold,
        })
    }

    /// Span tokens joined by single spaces.
    pub fn surface(&self) -> String {
        self.span.join(" ")
    }
}

pub const DUMMY: &str = "dummy";

fn flag(name: &str, on: bool) -> String {
    format!("{name}={}", u8::from(on))
}

/// Feature names for one candidate.
pub fn extract_features(c: &Candidate) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = c
        .left
        .iter()
        .chain(&c.right)
        .map(|t| format!("ctx={t}"))
        .collect();

    let chars = || c.span.iter().flat_map(|t| t.chars());
    let cap = c.span[0].chars().next().is_some_and(char::is_uppercase);
    let all_low = chars().all(char::is_lowercase);
    let all_cap1 = chars().all(char::is_uppercase);
    let all_cap2 = chars().all(|ch| ch.is_uppercase() || ch == '.');

    out.insert(flag("cap", cap));
    out.insert(flag("all-low", all_low));
    out.insert(flag("all-cap1", all_cap1));
    out.insert(flag("all-cap2", all_cap2));
    out.insert(
        match c.span.len() {
            1 => "num-tokens=1",
            2 => "num-tokens=2",
            _ => "num-tokens>2",
        }
        .to_string(),
    );
    out.insert(DUMMY.to_string());
    out
}

/// Frozen bijection between feature names and dense column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    name_to_index: BTreeMap<String, usize>,
    index_to_name: Vec<String>,
}

impl FeatureSpace {
    /// Indexes every feature of the training candidates, assigning columns
    /// in lexicographic name order.
    pub fn fit(candidates: &[Candidate]) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Config(
                "cannot fit a feature space on no candidates".into(),
            ));
        }
        let names: BTreeSet<String> = candidates.iter().flat_map(extract_features).collect();
        Self::from_names(names.into_iter().collect())
    }

    /// Uses the given order as the index order. Names must be unique.
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut name_to_index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains(['\n', '\r']) {
                return Err(Error::Input(format!("invalid feature name {name:?}")));
            }
            if name_to_index.insert(name.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate feature name '{name}'")));
            }
        }
        Ok(Self {
            name_to_index,
            index_to_name: names,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_name.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.name_to_index.get(name).copied()
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        self.index_to_name.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.index_to_name
    }

    /// Binary vector over the known names; unknown names are dropped.
    pub fn vectorize<'a, I>(&self, names: I) -> SparseVector
    where
        I: IntoIterator<Item = &'a String>,
    {
        let idx: BTreeSet<usize> = names.into_iter().filter_map(|n| self.index_of(n)).collect();
        SparseVector::indicators(idx).expect("indices are unique")
    }

    pub fn vectorize_candidate(&self, c: &Candidate) -> SparseVector {
        self.vectorize(&extract_features(c))
    }

    /// One feature name per line; line number (from 0) is the column index.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for name in &self.index_to_name {
                writeln!(w, "{name}")?;
            }
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut lines = Lines::open(path)?;
        let mut names = Vec::new();
        while let Some(line) = lines.next_line()? {
            if line.is_empty() {
                return Err(lines.error("empty feature name"));
            }
            names.push(line);
        }
        Self::from_names(names).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}
