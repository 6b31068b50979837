//! Hypersparse integer traffic matrices.
//!
//! A [`TrafficMatrix`] stores only its nonzero coordinates, sorted by
//! `(row, col)`, so its footprint depends on the number of distinct
//! source-destination pairs and never on the extent of the 64-bit ID space.
//! Every network quantity in [`crate::quantities`] is composed from the
//! kernels defined here.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PacketRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("packet count overflow at ({row}, {col})")]
    Overflow { row: u64, col: u64 },
    #[error("entries not strictly increasing at position {position}")]
    Unordered { position: usize },
    #[error("zero value stored at ({row}, {col})")]
    ZeroValue { row: u64, col: u64 },
}

/// One stored nonzero: `value` packets from source `row` to destination `col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub row: u64,
    pub col: u64,
    pub value: u64,
}

impl Entry {
    #[inline]
    fn key(&self) -> (u64, u64) {
        (self.row, self.col)
    }
}

/// Hypersparse matrix of packet counts.
///
/// Immutable once built. Entries are strictly ordered by `(row, col)`, hold
/// values `>= 1`, and `total` caches their sum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    entries: Vec<Entry>,
    total: u64,
}

/// Sparse `id -> degree` vector, ids strictly increasing, degrees `>= 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeVector {
    entries: Vec<(u64, u64)>,
}

impl DegreeVector {
    /// Builds from `(id, degree)` pairs in any order; duplicate ids are summed
    /// and zero degrees dropped.
    pub fn from_pairs(mut pairs: Vec<(u64, u64)>) -> Self {
        pairs.sort_unstable_by_key(|&(id, _)| id);
        let mut entries: Vec<(u64, u64)> = Vec::with_capacity(pairs.len());
        for (id, degree) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == id => last.1 += degree,
                _ => entries.push((id, degree)),
            }
        }
        entries.retain(|&(_, d)| d > 0);
        Self { entries }
    }

    /// Wraps pairs already sorted by distinct id with nonzero degrees.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(u64, u64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, d)| d > 0));
        Self { entries }
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<u64> {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    /// Degrees in id order.
    pub fn degrees(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(_, d)| d)
    }

    pub fn max(&self) -> u64 {
        self.degrees().max().unwrap_or(0)
    }

    pub fn sum(&self) -> u64 {
        self.degrees().sum()
    }
}

impl TrafficMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every `(src, dst)` pair of `records`.
    ///
    /// Sorts the coordinates and run-length merges duplicates, so the result
    /// is independent of record order.
    pub fn from_records<I>(records: I) -> Self
    where
        I: IntoIterator<Item = PacketRecord>,
    {
        let mut keys: Vec<(u64, u64)> = records.into_iter().map(|r| (r.src, r.dst)).collect();
        Self::from_keys(&mut keys)
    }

    /// Same as [`TrafficMatrix::from_records`] but reuses a caller-owned
    /// coordinate buffer (which is left sorted).
    pub fn from_keys(keys: &mut [(u64, u64)]) -> Self {
        keys.sort_unstable();
        let mut entries: Vec<Entry> = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let key = keys[i];
            let mut j = i + 1;
            while j < keys.len() && keys[j] == key {
                j += 1;
            }
            entries.push(Entry {
                row: key.0,
                col: key.1,
                value: (j - i) as u64,
            });
            i = j;
        }
        entries.shrink_to_fit();
        Self {
            entries,
            total: keys.len() as u64,
        }
    }

    /// Builds from already-aggregated entries, validating every invariant.
    pub fn from_entries(entries: Vec<Entry>) -> Result<Self, MatrixError> {
        let mut total: u64 = 0;
        for (position, e) in entries.iter().enumerate() {
            if e.value == 0 {
                return Err(MatrixError::ZeroValue {
                    row: e.row,
                    col: e.col,
                });
            }
            if position > 0 && entries[position - 1].key() >= e.key() {
                return Err(MatrixError::Unordered { position });
            }
            total = total.checked_add(e.value).ok_or(MatrixError::Overflow {
                row: e.row,
                col: e.col,
            })?;
        }
        Ok(Self { entries, total })
    }

    /// Builds from `(row, col, value)` triples in any order, summing
    /// duplicates and dropping zeros.
    pub fn from_triples<I>(triples: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = (u64, u64, u64)>,
    {
        let mut raw: Vec<(u64, u64, u64)> = triples.into_iter().collect();
        raw.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for (row, col, value) in raw {
            match entries.last_mut() {
                Some(last) if last.row == row && last.col == col => {
                    last.value = last
                        .value
                        .checked_add(value)
                        .ok_or(MatrixError::Overflow { row, col })?;
                }
                _ => entries.push(Entry { row, col, value }),
            }
        }
        entries.retain(|e| e.value > 0);
        Self::from_entries(entries)
    }

    /// Entrywise sum by a linear merge of the two sorted coordinate lists.
    ///
    /// `nnz(a + b) <= nnz(a) + nnz(b)`, with equality only for disjoint
    /// coordinate sets.
    pub fn add(&self, other: &TrafficMatrix) -> Result<TrafficMatrix, MatrixError> {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].key().cmp(&b[j].key()) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let value = a[i].value.checked_add(b[j].value).ok_or(MatrixError::Overflow {
                        row: a[i].row,
                        col: a[i].col,
                    })?;
                    out.push(Entry { value, ..a[i] });
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out.shrink_to_fit();
        let total = self
            .total
            .checked_add(other.total)
            .ok_or(MatrixError::Overflow { row: 0, col: 0 })?;
        Ok(TrafficMatrix { entries: out, total })
    }

    /// `|A|_0`: every stored value replaced by 1.
    pub fn zero_norm(&self) -> TrafficMatrix {
        let entries: Vec<Entry> = self.entries.iter().map(|e| Entry { value: 1, ..*e }).collect();
        TrafficMatrix {
            total: entries.len() as u64,
            entries,
        }
    }

    /// Keeps the entries for which `keep(row, col)` holds.
    pub fn select<F>(&self, mut keep: F) -> TrafficMatrix
    where
        F: FnMut(u64, u64) -> bool,
    {
        let entries: Vec<Entry> = self
            .entries
            .iter()
            .filter(|e| keep(e.row, e.col))
            .copied()
            .collect();
        TrafficMatrix {
            total: entries.iter().map(|e| e.value).sum(),
            entries,
        }
    }

    /// `A 1`: packets per source.
    pub fn row_sums(&self) -> DegreeVector {
        let mut entries: Vec<(u64, u64)> = Vec::new();
        for e in &self.entries {
            match entries.last_mut() {
                Some(last) if last.0 == e.row => last.1 += e.value,
                _ => entries.push((e.row, e.value)),
            }
        }
        DegreeVector { entries }
    }

    /// `1^T A`: packets per destination.
    pub fn col_sums(&self) -> DegreeVector {
        DegreeVector::from_pairs(self.entries.iter().map(|e| (e.col, e.value)).collect())
    }

    /// Largest stored value, 0 for an empty matrix.
    pub fn max_value(&self) -> u64 {
        self.entries.iter().map(|e| e.value).max().unwrap_or(0)
    }

    pub fn nnz(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Sum of all stored values.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, row: u64, col: u64) -> u64 {
        self.entries
            .binary_search_by_key(&(row, col), Entry::key)
            .map(|pos| self.entries[pos].value)
            .unwrap_or(0)
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.value)
    }

    /// Heap bytes held by the coordinate list.
    pub fn heap_bytes(&self) -> usize {
        self.entries.capacity() * std::mem::size_of::<Entry>()
    }
}
