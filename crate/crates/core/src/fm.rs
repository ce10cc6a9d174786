//! Second-order factorization machine.
//!
//! The model scores a sparse instance `x` as
//!
//! ```text
//! y(x) = w0 + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j
//! ```
//!
//! where each feature `i` owns a factor row `v_i` of width `k`. The pairwise
//! term is evaluated in `O(nnz * k)` through the identity
//! `sum_{i<j} <v_i,v_j> x_i x_j = 1/2 sum_f [(sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2]`.
//! [`FmModel::predict_raw_naive`] keeps the direct double loop around as an
//! independent check.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, Lines};
use crate::sparse::SparseVector;

pub const MODEL_HEADER: &str = "FMMODEL v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FmModel {
    n: usize,
    k: usize,
    pub(crate) w0: f64,
    pub(crate) w: Vec<f64>,
    /// Row-major `n x k` factor matrix.
    pub(crate) v: Vec<f64>,
}

impl FmModel {
    /// All-zero model of dimension `n` with factor width `k`.
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            w0: 0.0,
            w: vec![0.0; n],
            v: vec![0.0; n * k],
        }
    }

    /// Builds a model from explicit parameters. `v_rows` must hold `w.len()`
    /// rows of exactly `k` values each.
    pub fn from_parts(w0: f64, w: Vec<f64>, k: usize, v_rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = w.len();
        if v_rows.len() != n {
            return Err(Error::Input(format!(
                "factor matrix has {} rows, expected {n}",
                v_rows.len()
            )));
        }
        let mut v = Vec::with_capacity(n * k);
        for (i, row) in v_rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::Input(format!(
                    "factor row {i} has {} columns, expected {k}",
                    row.len()
                )));
            }
            v.extend(row);
        }
        let model = Self { n, k, w0, w, v };
        if !model.is_finite() {
            return Err(Error::Input("model parameters must be finite".into()));
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Factor row `v_i`.
    pub fn factor_row(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn factor_row_mut(&mut self, i: usize) -> &mut [f64] {
        let k = self.k;
        &mut self.v[i * k..(i + 1) * k]
    }

    pub fn is_finite(&self) -> bool {
        self.w0.is_finite()
            && self.w.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n {
            Err(Error::DimensionMismatch { index, dim: self.n })
        } else {
            Ok(())
        }
    }

    /// Factorized evaluation of the model score.
    pub fn predict_raw(&self, x: &SparseVector) -> Result<f64> {
        x.check_dim(self.n)?;
        Ok(self.score_unchecked(x, None))
    }

    /// Computes the score and, when `sums` is given, leaves the per-factor
    /// sums `S_f = sum_i v_if x_i` in it (used by the gradient).
    pub(crate) fn score_unchecked(&self, x: &SparseVector, sums: Option<&mut Vec<f64>>) -> f64 {
        let linear: f64 = x.iter().map(|(i, xi)| self.w[i] * xi).sum();
        let mut local = Vec::new();
        let sums = sums.unwrap_or(&mut local);
        sums.clear();
        sums.resize(self.k, 0.0);
        let mut sq = vec![0.0; self.k];
        for (i, xi) in x.iter() {
            for (f, &vif) in self.factor_row(i).iter().enumerate() {
                let t = vif * xi;
                sums[f] += t;
                sq[f] += t * t;
            }
        }
        let pairwise: f64 = sums.iter().zip(&sq).map(|(s, q)| s * s - q).sum::<f64>() * 0.5;
        self.w0 + linear + pairwise
    }

    /// Direct evaluation summing `<v_i, v_j> x_i x_j` over every pair of
    /// nonzero entries.
    pub fn predict_raw_naive(&self, x: &SparseVector) -> Result<f64> {
        x.check_dim(self.n)?;
        let e = x.entries();
        let mut score = self.w0;
        for &(i, xi) in e {
            score += self.w[i] * xi;
        }
        for (a, &(i, xi)) in e.iter().enumerate() {
            for &(j, xj) in &e[a + 1..] {
                score += self.dot_rows(i, j) * xi * xj;
            }
        }
        Ok(score)
    }

    /// Interaction weight `<v_i, v_j>`.
    pub fn interaction_weight(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.dot_rows(i, j))
    }

    fn dot_rows(&self, i: usize, j: usize) -> f64 {
        self.factor_row(i)
            .iter()
            .zip(self.factor_row(j))
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Writes the model in the `FMMODEL v1` text format.
    pub fn write_to(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{MODEL_HEADER}")?;
        writeln!(out, "{} {}", self.n, self.k)?;
        writeln!(out, "{}", fmt_f64(self.w0))?;
        writeln!(out, "{}", join(&self.w))?;
        for i in 0..self.n {
            writeln!(out, "{}", join(self.factor_row(i)))?;
        }
        Ok(())
    }

    /// Reads one `FMMODEL v1` block starting at the reader's next line.
    pub fn read_from<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let header = lines.expect_line("model header")?;
        if header.trim() != MODEL_HEADER {
            return Err(lines.error(format!("expected '{MODEL_HEADER}', found '{header}'")));
        }
        let dims = lines.expect_line("dimensions")?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| lines.error(format!("bad dimension '{t}'")))
            })
            .collect::<Result<_>>()?;
        let [n, k] = dims[..] else {
            return Err(lines.error("expected 'n k'"));
        };
        let w0 = parse_row(lines, 1, "bias")?[0];
        let w = parse_row(lines, n, "linear weights")?;
        let mut v_rows = Vec::with_capacity(n);
        for _ in 0..n {
            v_rows.push(parse_row(lines, k, "factor row")?);
        }
        Self::from_parts(w0, w, k, v_rows).map_err(|e| lines.error(e.to_string()))
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|&x| fmt_f64(x))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_row<R: BufRead>(lines: &mut Lines<R>, len: usize, what: &str) -> Result<Vec<f64>> {
    let line = lines.expect_line(what)?;
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| lines.error(format!("bad number '{t}' in {what}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != len {
        return Err(lines.error(format!(
            "{what}: expected {len} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}
