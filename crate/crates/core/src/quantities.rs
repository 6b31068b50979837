//! Network quantities of a traffic matrix and gateway quadrant restriction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::IdSet;
use crate::ingest::Anonymizer;
use crate::matrix::{DegreeVector, TrafficMatrix};

/// The scalar aggregates of one traffic matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantityVector {
    pub valid_packets: u64,
    pub unique_links: u64,
    pub max_link_packets: u64,
    pub unique_sources: u64,
    pub max_source_packets: u64,
    pub max_source_fanout: u64,
    pub unique_destinations: u64,
    pub max_destination_packets: u64,
    pub max_destination_fanin: u64,
}

/// Names one field of [`QuantityVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    ValidPackets,
    UniqueLinks,
    MaxLinkPackets,
    UniqueSources,
    MaxSourcePackets,
    MaxSourceFanout,
    UniqueDestinations,
    MaxDestinationPackets,
    MaxDestinationFanin,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::ValidPackets,
        Quantity::UniqueLinks,
        Quantity::MaxLinkPackets,
        Quantity::UniqueSources,
        Quantity::MaxSourcePackets,
        Quantity::MaxSourceFanout,
        Quantity::UniqueDestinations,
        Quantity::MaxDestinationPackets,
        Quantity::MaxDestinationFanin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::ValidPackets => "valid_packets",
            Quantity::UniqueLinks => "unique_links",
            Quantity::MaxLinkPackets => "max_link_packets",
            Quantity::UniqueSources => "unique_sources",
            Quantity::MaxSourcePackets => "max_source_packets",
            Quantity::MaxSourceFanout => "max_source_fanout",
            Quantity::UniqueDestinations => "unique_destinations",
            Quantity::MaxDestinationPackets => "max_destination_packets",
            Quantity::MaxDestinationFanin => "max_destination_fanin",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl FromStr for Quantity {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

impl QuantityVector {
    pub fn get(&self, q: Quantity) -> u64 {
        match q {
            Quantity::ValidPackets => self.valid_packets,
            Quantity::UniqueLinks => self.unique_links,
            Quantity::MaxLinkPackets => self.max_link_packets,
            Quantity::UniqueSources => self.unique_sources,
            Quantity::MaxSourcePackets => self.max_source_packets,
            Quantity::MaxSourceFanout => self.max_source_fanout,
            Quantity::UniqueDestinations => self.unique_destinations,
            Quantity::MaxDestinationPackets => self.max_destination_packets,
            Quantity::MaxDestinationFanin => self.max_destination_fanin,
        }
    }

    pub fn set(&mut self, q: Quantity, value: u64) {
        let slot = match q {
            Quantity::ValidPackets => &mut self.valid_packets,
            Quantity::UniqueLinks => &mut self.unique_links,
            Quantity::MaxLinkPackets => &mut self.max_link_packets,
            Quantity::UniqueSources => &mut self.unique_sources,
            Quantity::MaxSourcePackets => &mut self.max_source_packets,
            Quantity::MaxSourceFanout => &mut self.max_source_fanout,
            Quantity::UniqueDestinations => &mut self.unique_destinations,
            Quantity::MaxDestinationPackets => &mut self.max_destination_packets,
            Quantity::MaxDestinationFanin => &mut self.max_destination_fanin,
        };
        *slot = value;
    }

    /// Checks the ordering relations every traffic matrix satisfies.
    pub fn is_consistent(&self) -> bool {
        self.valid_packets >= self.unique_links
            && self.unique_links >= self.unique_sources.max(self.unique_destinations)
            && self.max_link_packets <= self.max_source_packets.min(self.max_destination_packets)
            && self.max_source_fanout <= self.unique_destinations
            && self.max_destination_fanin <= self.unique_sources
    }
}

/// Computes every aggregate in one pass over the rows plus one sort of the
/// columns.
pub fn compute_quantities(a: &TrafficMatrix) -> QuantityVector {
    let entries = a.entries();
    let mut q = QuantityVector {
        valid_packets: a.total(),
        unique_links: a.nnz(),
        max_link_packets: a.max_value(),
        ..QuantityVector::default()
    };

    let mut i = 0;
    while i < entries.len() {
        let row = entries[i].row;
        let (mut packets, mut fanout) = (0u64, 0u64);
        while i < entries.len() && entries[i].row == row {
            packets += entries[i].value;
            fanout += 1;
            i += 1;
        }
        q.unique_sources += 1;
        q.max_source_packets = q.max_source_packets.max(packets);
        q.max_source_fanout = q.max_source_fanout.max(fanout);
    }

    let mut cols: Vec<(u64, u64)> = entries.iter().map(|e| (e.col, e.value)).collect();
    cols.sort_unstable_by_key(|&(c, _)| c);
    let mut i = 0;
    while i < cols.len() {
        let col = cols[i].0;
        let (mut packets, mut fanin) = (0u64, 0u64);
        while i < cols.len() && cols[i].0 == col {
            packets += cols[i].1;
            fanin += 1;
            i += 1;
        }
        q.unique_destinations += 1;
        q.max_destination_packets = q.max_destination_packets.max(packets);
        q.max_destination_fanin = q.max_destination_fanin.max(fanin);
    }
    q
}

/// The same aggregates composed from the matrix kernels, e.g. unique sources
/// as `1^T |A 1|_0` and max source fan-out as `max(|A|_0 1)`.
pub fn compute_quantities_from_kernels(a: &TrafficMatrix) -> QuantityVector {
    let links = a.zero_norm();
    let source_packets = a.row_sums();
    let destination_packets = a.col_sums();
    QuantityVector {
        valid_packets: a.total(),
        unique_links: links.total(),
        max_link_packets: a.max_value(),
        unique_sources: source_packets.len() as u64,
        max_source_packets: source_packets.max(),
        max_source_fanout: links.row_sums().max(),
        unique_destinations: destination_packets.len() as u64,
        max_destination_packets: destination_packets.max(),
        max_destination_fanin: links.col_sums().max(),
    }
}

/// Which per-node (or per-link) degree a distribution is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeKind {
    SourcePackets,
    SourceFanout,
    LinkPackets,
    DestinationFanin,
    DestinationPackets,
}

impl DegreeKind {
    pub const ALL: [DegreeKind; 5] = [
        DegreeKind::SourcePackets,
        DegreeKind::SourceFanout,
        DegreeKind::LinkPackets,
        DegreeKind::DestinationFanin,
        DegreeKind::DestinationPackets,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DegreeKind::SourcePackets => "source_packets",
            DegreeKind::SourceFanout => "source_fanout",
            DegreeKind::LinkPackets => "link_packets",
            DegreeKind::DestinationFanin => "destination_fanin",
            DegreeKind::DestinationPackets => "destination_packets",
        }
    }
}

impl fmt::Display for DegreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DegreeKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DegreeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

/// The five per-window degree vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeVectors {
    pub source_packets: DegreeVector,
    pub source_fanout: DegreeVector,
    pub destination_packets: DegreeVector,
    pub destination_fanin: DegreeVector,
    /// Packet count of every stored link, in coordinate order.
    pub link_packets: Vec<u64>,
}

impl DegreeVectors {
    pub fn degrees(&self, kind: DegreeKind) -> Vec<u64> {
        match kind {
            DegreeKind::SourcePackets => self.source_packets.degrees().collect(),
            DegreeKind::SourceFanout => self.source_fanout.degrees().collect(),
            DegreeKind::DestinationPackets => self.destination_packets.degrees().collect(),
            DegreeKind::DestinationFanin => self.destination_fanin.degrees().collect(),
            DegreeKind::LinkPackets => self.link_packets.clone(),
        }
    }
}

pub fn degree_vectors(a: &TrafficMatrix) -> DegreeVectors {
    let links = a.zero_norm();
    DegreeVectors {
        source_packets: a.row_sums(),
        source_fanout: links.row_sums(),
        destination_packets: a.col_sums(),
        destination_fanin: links.col_sums(),
        link_packets: a.values().collect(),
    }
}

/// Quantities and all degree vectors from one row pass and one column sort.
pub fn profile(a: &TrafficMatrix) -> (QuantityVector, DegreeVectors) {
    let entries = a.entries();
    let mut source_packets = Vec::new();
    let mut source_fanout = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let row = entries[i].row;
        let (mut packets, mut fanout) = (0u64, 0u64);
        while i < entries.len() && entries[i].row == row {
            packets += entries[i].value;
            fanout += 1;
            i += 1;
        }
        source_packets.push((row, packets));
        source_fanout.push((row, fanout));
    }

    let mut cols: Vec<(u64, u64)> = entries.iter().map(|e| (e.col, e.value)).collect();
    cols.sort_unstable_by_key(|&(c, _)| c);
    let mut destination_packets = Vec::new();
    let mut destination_fanin = Vec::new();
    let mut i = 0;
    while i < cols.len() {
        let col = cols[i].0;
        let (mut packets, mut fanin) = (0u64, 0u64);
        while i < cols.len() && cols[i].0 == col {
            packets += cols[i].1;
            fanin += 1;
            i += 1;
        }
        destination_packets.push((col, packets));
        destination_fanin.push((col, fanin));
    }

    let max = |v: &[(u64, u64)]| v.iter().map(|&(_, d)| d).max().unwrap_or(0);
    let q = QuantityVector {
        valid_packets: a.total(),
        unique_links: a.nnz(),
        max_link_packets: a.max_value(),
        unique_sources: source_packets.len() as u64,
        max_source_packets: max(&source_packets),
        max_source_fanout: max(&source_fanout),
        unique_destinations: destination_packets.len() as u64,
        max_destination_packets: max(&destination_packets),
        max_destination_fanin: max(&destination_fanin),
    };
    let vectors = DegreeVectors {
        source_packets: DegreeVector::from_sorted_unchecked(source_packets),
        source_fanout: DegreeVector::from_sorted_unchecked(source_fanout),
        destination_packets: DegreeVector::from_sorted_unchecked(destination_packets),
        destination_fanin: DegreeVector::from_sorted_unchecked(destination_fanin),
        link_packets: a.values().collect(),
    };
    (q, vectors)
}

/// Degrees of one kind, without building the other vectors.
pub fn degrees_of(a: &TrafficMatrix, kind: DegreeKind) -> Vec<u64> {
    match kind {
        DegreeKind::LinkPackets => a.values().collect(),
        DegreeKind::SourcePackets => a.row_sums().degrees().collect(),
        DegreeKind::SourceFanout => a.zero_norm().row_sums().degrees().collect(),
        DegreeKind::DestinationPackets => a.col_sums().degrees().collect(),
        DegreeKind::DestinationFanin => a.zero_norm().col_sums().degrees().collect(),
    }
}

/// A block of the gateway traffic matrix, named source side first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    ExternalToInternal,
    InternalToExternal,
    InternalToInternal,
    ExternalToExternal,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::ExternalToInternal,
        Quadrant::InternalToExternal,
        Quadrant::InternalToInternal,
        Quadrant::ExternalToExternal,
    ];

    /// Whether a `(source internal?, destination internal?)` pair falls here.
    pub fn admits(self, src_internal: bool, dst_internal: bool) -> bool {
        match self {
            Quadrant::ExternalToInternal => !src_internal && dst_internal,
            Quadrant::InternalToExternal => src_internal && !dst_internal,
            Quadrant::InternalToInternal => src_internal && dst_internal,
            Quadrant::ExternalToExternal => !src_internal && !dst_internal,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Quadrant::ExternalToInternal => "ei",
            Quadrant::InternalToExternal => "ie",
            Quadrant::InternalToInternal => "ii",
            Quadrant::ExternalToExternal => "ee",
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Quadrant {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Quadrant::ALL
            .into_iter()
            .find(|q| q.code() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantSpec {
    pub internal: IdSet,
    pub quadrant: Quadrant,
    /// Set when matrix IDs were anonymized after `internal` was defined.
    #[serde(skip)]
    pub relabel: Option<Anonymizer>,
}

impl QuadrantSpec {
    pub fn new(internal: IdSet, quadrant: Quadrant) -> Self {
        Self {
            internal,
            quadrant,
            relabel: None,
        }
    }

    /// Classifies anonymized IDs by their pre-image under `anonymizer`.
    pub fn relabeled(mut self, anonymizer: Anonymizer) -> Self {
        self.relabel = Some(anonymizer);
        self
    }

    pub fn is_internal(&self, id: u64) -> bool {
        match &self.relabel {
            Some(anon) => self.internal.contains(anon.invert(id)),
            None => self.internal.contains(id),
        }
    }
}

/// Restriction of `a` to the entries in the selected quadrant.
pub fn quadrant(a: &TrafficMatrix, spec: &QuadrantSpec) -> TrafficMatrix {
    a.select(|row, col| spec.quadrant.admits(spec.is_internal(row), spec.is_internal(col)))
}
