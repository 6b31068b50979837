//! Sets of node IDs given as explicit members and inclusive ranges.

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdSetError {
    #[error("cannot parse id set item `{0}`")]
    BadItem(String),
    #[error("empty range {lo}-{hi}")]
    EmptyRange { lo: u64, hi: u64 },
}

/// A total membership predicate over `u64` IDs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSet {
    ids: BTreeSet<u64>,
    ranges: Vec<(u64, u64)>,
}

impl IdSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = u64>>(ids: I) -> Self {
        Self {
            ids: ids.into_iter().collect(),
            ranges: Vec::new(),
        }
    }

    pub fn from_range(range: RangeInclusive<u64>) -> Self {
        let mut set = Self::new();
        set.insert_range(range);
        set
    }

    pub fn insert(&mut self, id: u64) {
        self.ids.insert(id);
    }

    /// Empty ranges (`lo > hi`) are ignored.
    pub fn insert_range(&mut self, range: RangeInclusive<u64>) {
        let (lo, hi) = range.into_inner();
        if lo <= hi {
            self.ranges.push((lo, hi));
        }
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.contains(&id) || self.ranges.iter().any(|&(lo, hi)| lo <= id && id <= hi)
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty() && self.ranges.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.ids.iter().copied()
    }

    pub fn ranges(&self) -> impl Iterator<Item = RangeInclusive<u64>> + '_ {
        self.ranges.iter().map(|&(lo, hi)| lo..=hi)
    }

    /// True when some ID belongs to both sets.
    pub fn intersects(&self, other: &IdSet) -> bool {
        self.ids.iter().any(|&id| other.contains(id))
            || other.ids.iter().any(|&id| self.contains(id))
            || self.ranges.iter().any(|&(a_lo, a_hi)| {
                other
                    .ranges
                    .iter()
                    .any(|&(b_lo, b_hi)| a_lo <= b_hi && b_lo <= a_hi)
            })
    }

    /// Parses a list of items separated by commas, whitespace or newlines.
    ///
    /// Each item is a decimal id, an inclusive `lo-hi` range, a dotted-quad
    /// IPv4 address, or an IPv4 CIDR block `a.b.c.d/len`. Text after `#` on a
    /// line is ignored.
    pub fn parse(text: &str) -> Result<Self, IdSetError> {
        let mut set = IdSet::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if item.is_empty() {
                    continue;
                }
                set.parse_item(item)?;
            }
        }
        Ok(set)
    }

    fn parse_item(&mut self, item: &str) -> Result<(), IdSetError> {
        let bad = || IdSetError::BadItem(item.to_string());
        if item.contains('/') {
            let range = cidr_range(item).ok_or_else(bad)?;
            self.insert_range(range);
        } else if let Some((lo, hi)) = item.split_once('-') {
            let lo = parse_id(lo).ok_or_else(bad)?;
            let hi = parse_id(hi).ok_or_else(bad)?;
            if lo > hi {
                return Err(IdSetError::EmptyRange { lo, hi });
            }
            self.insert_range(lo..=hi);
        } else {
            self.insert(parse_id(item).ok_or_else(bad)?);
        }
        Ok(())
    }
}

impl FromStr for IdSet {
    type Err = IdSetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Writes one item per line in a form [`IdSet::parse`] reads back.
impl fmt::Display for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in &self.ids {
            writeln!(f, "{id}")?;
        }
        for (lo, hi) in &self.ranges {
            writeln!(f, "{lo}-{hi}")?;
        }
        Ok(())
    }
}

fn parse_id(text: &str) -> Option<u64> {
    if text.contains('.') {
        text.parse::<Ipv4Addr>().ok().map(ipv4_to_id)
    } else {
        text.parse().ok()
    }
}

/// Maps a dotted-quad IPv4 address to its 32-bit numeric value.
pub fn ipv4_to_id(addr: Ipv4Addr) -> u64 {
    u64::from(u32::from(addr))
}

/// Inclusive ID range covered by an IPv4 CIDR block, e.g. `10.0.0.0/8`.
pub fn cidr_range(text: &str) -> Option<RangeInclusive<u64>> {
    let (addr, len) = text.split_once('/')?;
    let addr: Ipv4Addr = addr.parse().ok()?;
    let len: u32 = len.parse().ok()?;
    if len > 32 {
        return None;
    }
    let host_bits = 32 - len;
    let base = u64::from(u32::from(addr)) >> host_bits << host_bits;
    Some(base..=base + ((1u64 << host_bits) - 1))
}
