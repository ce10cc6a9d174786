//! Sparse instance representation.

use crate::error::{Error, Result};

/// A sparse real vector stored as `(index, value)` pairs.
///
/// Indices are strictly increasing and every stored value is finite and
/// nonzero. Zero-valued entries are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a vector from entries that must already be sorted by index.
    ///
    /// Zero values are dropped. Duplicate or decreasing indices and
    /// non-finite values are rejected.
    pub fn from_sorted(entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut out = Vec::with_capacity(entries.len());
        let mut prev: Option<usize> = None;
        for (index, value) in entries {
            if let Some(p) = prev {
                if index == p {
                    return Err(Error::Input(format!("duplicate index {index}")));
                }
                if index < p {
                    return Err(Error::Input(format!(
                        "index {index} follows {p}; indices must be strictly increasing"
                    )));
                }
            }
            if !value.is_finite() {
                return Err(Error::Input(format!("non-finite value at index {index}")));
            }
            prev = Some(index);
            if value != 0.0 {
                out.push((index, value));
            }
        }
        Ok(Self { entries: out })
    }

    /// Builds a vector from entries in any order. Duplicates are still rejected.
    pub fn from_unsorted(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        Self::from_sorted(entries)
    }

    /// Binary indicator vector with value 1.0 at each index.
    pub fn indicators<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        Self::from_unsorted(indices.into_iter().map(|i| (i, 1.0)).collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Fails when any index is `>= dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.max_index() {
            Some(index) if index >= dim => Err(Error::DimensionMismatch { index, dim }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_dropped() {
        let v = SparseVector::from_sorted(vec![(0, 1.0), (3, 0.0), (5, -2.0)]).unwrap();
        assert_eq!(v.entries(), &[(0, 1.0), (5, -2.0)]);
    }

    #[test]
    fn rejects_duplicates_and_disorder() {
        assert!(SparseVector::from_sorted(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::from_sorted(vec![(2, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::from_unsorted(vec![(2, 1.0), (2, 2.0)]).is_err());
        assert!(SparseVector::from_sorted(vec![(0, f64::NAN)]).is_err());
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let v = SparseVector::indicators([7, 0, 3]).unwrap();
        assert_eq!(v.entries(), &[(0, 1.0), (3, 1.0), (7, 1.0)]);
        assert!(v.check_dim(8).is_ok());
        assert!(matches!(
            v.check_dim(7),
            Err(Error::DimensionMismatch { index: 7, dim: 7 })
        ));
    }
}
