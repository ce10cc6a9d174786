//! Column-formatted NE corpora: sentence parsing, candidate extraction, the
//! unknown-candidate filter, corpus statistics and the candidates TSV.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::featurizer::Candidate;
use crate::io::{write_atomic, Lines};

pub const NON_ENTITY: &str = "O";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bio<'a> {
    Begin(&'a str),
    Inside(&'a str),
    Outside,
}

fn split_bio(tag: &str) -> Option<Bio<'_>> {
    if tag == NON_ENTITY {
        return Some(Bio::Outside);
    }
    let (prefix, kind) = tag.split_once('-')?;
    if kind.is_empty() {
        return None;
    }
    match prefix {
        "B" => Some(Bio::Begin(kind)),
        "I" => Some(Bio::Inside(kind)),
        _ => None,
    }
}

/// A tokenized sentence with one BIO tag per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<(String, String)>,
}

impl Sentence {
    /// Builds a sentence, promoting any `I-X` that does not continue an
    /// `X` span to `B-X`. Tags other than `O`, `B-X`, `I-X` are rejected.
    pub fn new(tokens: Vec<(String, String)>) -> Result<Self> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut prev: Option<String> = None;
        for (surface, tag) in tokens {
            let bio =
                split_bio(&tag).ok_or_else(|| Error::Input(format!("malformed tag '{tag}'")))?;
            let fixed = match bio {
                Bio::Inside(kind) if prev.as_deref() != Some(kind) => format!("B-{kind}"),
                _ => tag.clone(),
            };
            prev = match bio {
                Bio::Begin(kind) | Bio::Inside(kind) => Some(kind.to_string()),
                Bio::Outside => None,
            };
            out.push((surface, fixed));
        }
        Ok(Self { tokens: out })
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|(s, _)| s.clone()).collect()
    }
}

/// Parses a whitespace-column file: blank lines separate sentences and
/// `-DOCSTART-` lines are skipped.
pub fn parse_column_file(
    path: &Path,
    token_column: usize,
    tag_column: usize,
) -> Result<Vec<Sentence>> {
    parse_columns(&mut Lines::open(path)?, token_column, tag_column)
}

pub fn parse_columns<R: BufRead>(
    lines: &mut Lines<R>,
    token_column: usize,
    tag_column: usize,
) -> Result<Vec<Sentence>> {
    let need = token_column.max(tag_column) + 1;
    let mut sentences = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    let mut start_line = 0;
    let mut flush =
        |current: &mut Vec<(String, String)>, line: usize, lines: &Lines<R>| -> Result<()> {
            if !current.is_empty() {
                let s = Sentence::new(std::mem::take(current))
                    .map_err(|e| Error::parse(lines.path(), line, e.to_string()))?;
                sentences.push(s);
            }
            Ok(())
        };
    while let Some(line) = lines.next_line()? {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut current, start_line, lines)?;
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() < need {
            return Err(lines.error(format!(
                "expected at least {need} columns, found {}",
                cols.len()
            )));
        }
        if split_bio(cols[tag_column]).is_none() {
            return Err(lines.error(format!("malformed tag '{}'", cols[tag_column])));
        }
        if current.is_empty() {
            start_line = lines.line_number();
        }
        current.push((cols[token_column].to_string(), cols[tag_column].to_string()));
    }
    flush(&mut current, start_line, lines)?;
    Ok(sentences)
}

/// One candidate per entity span, plus one `O` candidate per untagged token
/// starting with an uppercase letter. Candidates come out in sentence order
/// and, within a sentence, by start position.
pub fn extract_candidates(sentences: &[Sentence]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for sentence in sentences {
        let words = sentence.surfaces();
        let tags: Vec<Bio> = sentence
            .tokens
            .iter()
            .map(|(_, t)| split_bio(t).unwrap_or(Bio::Outside))
            .collect();
        let mut i = 0;
        while i < words.len() {
            let (end, gold) = match tags[i] {
                Bio::Begin(kind) | Bio::Inside(kind) => {
                    let mut j = i + 1;
                    while j < words.len() && tags[j] == Bio::Inside(kind) {
                        j += 1;
                    }
                    (j, Some(kind.to_string()))
                }
                Bio::Outside => {
                    let upper = words[i].chars().next().is_some_and(char::is_uppercase);
                    (i + 1, upper.then(|| NON_ENTITY.to_string()))
                }
            };
            if let Some(gold) = gold {
                out.push(Candidate {
                    span: words[i..end].to_vec(),
                    left: words[..i].to_vec(),
                    right: words[end..].to_vec(),
                    gold: Some(gold),
                });
            }
            i = end;
        }
    }
    out
}

fn normalized_surface(c: &Candidate) -> String {
    c.surface().to_lowercase()
}

/// Drops evaluation candidates whose lowercased surface form occurs among the
/// training candidates.
pub fn filter_unknown(eval: &[Candidate], training: &[Candidate]) -> Vec<Candidate> {
    let seen: HashSet<String> = training.iter().map(normalized_surface).collect();
    eval.iter()
        .filter(|c| !seen.contains(&normalized_surface(c)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagCount {
    pub tokens: usize,
    pub types: usize,
}

/// Token and type counts per gold tag.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub per_tag: BTreeMap<String, TagCount>,
}

impl CorpusStats {
    pub fn get(&self, tag: &str) -> TagCount {
        self.per_tag.get(tag).copied().unwrap_or_default()
    }

    pub fn total_tokens(&self) -> usize {
        self.per_tag.values().map(|c| c.tokens).sum()
    }
}

/// Types are distinct lowercased surface forms. Candidates without a gold
/// tag are not counted.
pub fn corpus_stats(candidates: &[Candidate]) -> CorpusStats {
    let mut tokens: BTreeMap<String, usize> = BTreeMap::new();
    let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in candidates {
        if let Some(tag) = &c.gold {
            *tokens.entry(tag.clone()).or_default() += 1;
            types
                .entry(tag.clone())
                .or_default()
                .insert(normalized_surface(c));
        }
    }
    let per_tag = tokens
        .into_iter()
        .map(|(tag, n)| {
            let t = types[&tag].len();
            (
                tag,
                TagCount {
                    tokens: n,
                    types: t,
                },
            )
        })
        .collect();
    CorpusStats { per_tag }
}

/// Renders statistics for several splits side by side as
/// `tokens (types)` columns.
pub fn format_stats_table(splits: &[(&str, &CorpusStats)]) -> String {
    let mut tags: BTreeSet<&str> = BTreeSet::new();
    for (_, s) in splits {
        tags.extend(s.per_tag.keys().map(String::as_str));
    }
    // entity tags first, O last
    let mut order: Vec<&str> = tags.iter().copied().filter(|t| *t != NON_ENTITY).collect();
    if tags.contains(NON_ENTITY) {
        order.push(NON_ENTITY);
    }
    let mut out = format!("{:<6}", "tag");
    for (name, _) in splits {
        out.push_str(&format!(" {name:>20}"));
    }
    out.push('\n');
    for tag in order {
        out.push_str(&format!("{tag:<6}"));
        for (_, s) in splits {
            let c = s.get(tag);
            out.push_str(&format!(" {:>20}", format!("{} ({})", c.tokens, c.types)));
        }
        out.push('\n');
    }
    out
}

fn join_tokens(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Writes candidates as `tag<TAB>span<TAB>left<TAB>right`, tokens joined by
/// single spaces. Candidates without gold tags are written with `O`.
pub fn write_candidates(path: &Path, candidates: &[Candidate]) -> Result<()> {
    write_atomic(path, |w| {
        for c in candidates {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                c.gold.as_deref().unwrap_or(NON_ENTITY),
                join_tokens(&c.span),
                join_tokens(&c.left),
                join_tokens(&c.right)
            )?;
        }
        Ok(())
    })
}

pub fn read_candidates(path: &Path) -> Result<Vec<Candidate>> {
    let mut lines = Lines::open(path)?;
    let mut out = Vec::new();
    while let Some(line) = lines.next_line()? {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(lines.error(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let toks = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
        let tag = fields[0].trim();
        if tag.is_empty() {
            return Err(lines.error("empty tag"));
        }
        let c = Candidate::new(
            toks(fields[1]),
            toks(fields[2]),
            toks(fields[3]),
            Some(tag.to_string()),
        )
        .map_err(|e| lines.error(e.to_string()))?;
        out.push(c);
    }
    Ok(out)
}
