//! Synthetic packet streams with known scaling behaviour.
//!
//! Four simple gateway topologies whose quantities grow either not at all or
//! linearly with the window size, plus a heavy-tailed generator drawing both
//! endpoints from Zipf popularity distributions.
//!
//! Internal nodes live in [`INTERNAL_BASE`]`..`, external nodes in
//! [`EXTERNAL_BASE`]`..`; the generated stream declares the internal range so
//! quadrant analysis applies directly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::IdSet;
use crate::ingest::PacketRecord;
use crate::quantities::{Quadrant, Quantity, UnknownName};

pub const INTERNAL_BASE: u64 = 1 << 48;
pub const INTERNAL_SPAN: u64 = 1 << 40;
pub const EXTERNAL_BASE: u64 = 1 << 56;
pub const DEFAULT_ZIPF_POPULATION: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("balanced traffic needs an even, nonzero packet count (got {0})")]
    OddBalanced(u64),
    #[error("packet count must be positive")]
    NoPackets,
    #[error("peer pool must be nonempty")]
    NoPeers,
    #[error("zipf exponent must be positive and finite (got {0})")]
    BadZipfExponent(f64),
    #[error("zipf population must be in 1..={max} (got {got})")]
    BadPopulation { got: u64, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    /// Every packet uses a source-destination pair never seen before.
    IsolatedLinks,
    /// All packets flow between one external and one internal node.
    SingleLink,
    /// One internal node talks to many external peers.
    InternalSupernode,
    /// One external node talks to many internal peers.
    ExternalSupernode,
    /// Both endpoints drawn from Zipf popularity.
    Zipf,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 5] = [
        TopologyKind::IsolatedLinks,
        TopologyKind::SingleLink,
        TopologyKind::InternalSupernode,
        TopologyKind::ExternalSupernode,
        TopologyKind::Zipf,
    ];

    pub const SIMPLE: [TopologyKind; 4] = [
        TopologyKind::IsolatedLinks,
        TopologyKind::SingleLink,
        TopologyKind::InternalSupernode,
        TopologyKind::ExternalSupernode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::IsolatedLinks => "isolated-links",
            TopologyKind::SingleLink => "single-link",
            TopologyKind::InternalSupernode => "internal-supernode",
            TopologyKind::ExternalSupernode => "external-supernode",
            TopologyKind::Zipf => "zipf",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('_', "-");
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub packets: u64,
    /// Alternate external->internal and internal->external packets.
    pub balanced: bool,
    /// Supernode peer pool. `None` draws a fresh peer for every packet pair.
    pub peers: Option<u64>,
    pub zipf_exponent: f64,
    pub population: u64,
    pub seed: u64,
}

impl TopologySpec {
    pub fn new(kind: TopologyKind, packets: u64) -> Self {
        Self {
            kind,
            packets,
            balanced: false,
            peers: None,
            zipf_exponent: 1.0,
            population: DEFAULT_ZIPF_POPULATION,
            seed: 0,
        }
    }

    pub fn balanced(mut self) -> Self {
        self.balanced = true;
        self
    }

    pub fn with_peers(mut self, peers: u64) -> Self {
        self.peers = Some(peers);
        self
    }

    pub fn with_zipf(mut self, exponent: f64, population: u64) -> Self {
        self.zipf_exponent = exponent;
        self.population = population;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.packets == 0 {
            return Err(SynthError::NoPackets);
        }
        if self.balanced && !self.packets.is_multiple_of(2) {
            return Err(SynthError::OddBalanced(self.packets));
        }
        if self.peers == Some(0) {
            return Err(SynthError::NoPeers);
        }
        if self.kind == TopologyKind::Zipf {
            if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
                return Err(SynthError::BadZipfExponent(self.zipf_exponent));
            }
            let max = INTERNAL_SPAN.min(u64::from(u32::MAX));
            if self.population == 0 || self.population > max {
                return Err(SynthError::BadPopulation {
                    got: self.population,
                    max,
                });
            }
        }
        Ok(())
    }
}

/// The IDs generated streams treat as internal to the gateway.
pub fn internal_set() -> IdSet {
    IdSet::from_range(INTERNAL_BASE..=INTERNAL_BASE + INTERNAL_SPAN - 1)
}

fn internal(n: u64) -> u64 {
    INTERNAL_BASE + n
}

fn external(n: u64) -> u64 {
    EXTERNAL_BASE + n
}

const GUIDE_BUCKETS: usize = 1 << 16;

/// Inverse-CDF sampler over ranks `0..population` with weight `(rank+1)^-s`.
///
/// A guide table maps each of [`GUIDE_BUCKETS`] equal slices of `[0, 1)` to
/// the rank range it can land in, so a draw bisects only that range.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cumulative: Vec<f64>,
    guide: Vec<u32>,
}

impl ZipfTable {
    pub fn new(exponent: f64, population: u64) -> Self {
        let mut cumulative = Vec::with_capacity(population as usize);
        let mut running = 0.0f64;
        for rank in 1..=population {
            running += (rank as f64).powf(-exponent);
            cumulative.push(running);
        }
        for c in &mut cumulative {
            *c /= running;
        }
        let guide = (0..=GUIDE_BUCKETS)
            .map(|b| {
                let edge = b as f64 / GUIDE_BUCKETS as f64;
                cumulative.partition_point(|&c| c < edge) as u32
            })
            .collect();
        Self { cumulative, guide }
    }

    /// Smallest rank whose cumulative probability reaches a uniform draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let bucket = ((u * GUIDE_BUCKETS as f64) as usize).min(GUIDE_BUCKETS - 1);
        let lo = self.guide[bucket] as usize;
        let hi = (self.guide[bucket + 1] as usize + 1).min(self.cumulative.len());
        let rank = lo + self.cumulative[lo..hi].partition_point(|&c| c < u);
        rank.min(self.cumulative.len() - 1) as u64
    }

    /// Probability of `rank`.
    pub fn probability(&self, rank: u64) -> f64 {
        let r = rank as usize;
        let prev = if r == 0 { 0.0 } else { self.cumulative[r - 1] };
        self.cumulative[r] - prev
    }

    pub fn population(&self) -> u64 {
        self.cumulative.len() as u64
    }
}

/// Lazily generated stream for one [`TopologySpec`].
pub struct TopologyStream {
    spec: TopologySpec,
    emitted: u64,
    rng: ChaCha8Rng,
    zipf: Option<ZipfTable>,
}

impl TopologyStream {
    pub fn new(spec: TopologySpec) -> Result<Self, SynthError> {
        spec.validate()?;
        let zipf = (spec.kind == TopologyKind::Zipf).then(|| ZipfTable::new(spec.zipf_exponent, spec.population));
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            spec,
            emitted: 0,
            zipf,
        })
    }

    fn peer(&self, pair: u64) -> u64 {
        match self.spec.peers {
            Some(pool) => pair % pool,
            None => pair,
        }
    }

    /// `(external, internal)` endpoints of packet `k`.
    fn endpoints(&mut self, k: u64, pair: u64) -> (u64, u64) {
        match self.spec.kind {
            TopologyKind::IsolatedLinks => (external(k), internal(k)),
            TopologyKind::SingleLink => (external(0), internal(0)),
            TopologyKind::InternalSupernode => (external(self.peer(pair)), internal(0)),
            TopologyKind::ExternalSupernode => (external(0), internal(self.peer(pair))),
            TopologyKind::Zipf => {
                let table = self.zipf.as_ref().expect("zipf table");
                let e = table.sample(&mut self.rng);
                let i = table.sample(&mut self.rng);
                (external(e), internal(i))
            }
        }
    }
}

impl Iterator for TopologyStream {
    type Item = PacketRecord;

    fn next(&mut self) -> Option<PacketRecord> {
        if self.emitted == self.spec.packets {
            return None;
        }
        let k = self.emitted;
        self.emitted += 1;
        let (outbound, pair) = if self.spec.balanced { (k % 2 == 1, k / 2) } else { (false, k) };
        let (ext, int) = self.endpoints(k, pair);
        Some(if outbound {
            PacketRecord::new(int, ext)
        } else {
            PacketRecord::new(ext, int)
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.spec.packets - self.emitted) as usize;
        (left, Some(left))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticStream {
    pub records: Vec<PacketRecord>,
    pub internal: IdSet,
}

/// Generates the full stream in memory.
pub fn generate(spec: &TopologySpec) -> Result<SyntheticStream, SynthError> {
    let records = TopologyStream::new(spec.clone())?.collect();
    Ok(SyntheticStream {
        records,
        internal: internal_set(),
    })
}

/// Analytic growth class of a quantity under growing window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExpectedExponent {
    /// `N_V^0`
    Constant,
    /// `N_V^1`
    Linear,
}

impl ExpectedExponent {
    pub fn value(self) -> f64 {
        match self {
            ExpectedExponent::Constant => 0.0,
            ExpectedExponent::Linear => 1.0,
        }
    }
}

/// How one endpoint role behaves inside a quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// A new node for every packet.
    Fresh,
    /// One node carries all packets.
    Single,
}

fn sides(kind: TopologyKind, quadrant: Quadrant) -> Option<(Side, Side)> {
    use Side::*;
    let ei = match kind {
        TopologyKind::IsolatedLinks => (Fresh, Fresh),
        TopologyKind::SingleLink => (Single, Single),
        TopologyKind::InternalSupernode => (Fresh, Single),
        TopologyKind::ExternalSupernode => (Single, Fresh),
        TopologyKind::Zipf => return None,
    };
    match quadrant {
        Quadrant::ExternalToInternal => Some(ei),
        // The reverse direction swaps which role each node plays.
        Quadrant::InternalToExternal => Some((ei.1, ei.0)),
        Quadrant::InternalToInternal | Quadrant::ExternalToExternal => None,
    }
}

fn exponent_for(src: Side, dst: Side, quantity: Quantity) -> ExpectedExponent {
    use ExpectedExponent::*;
    let fresh_link = src == Side::Fresh || dst == Side::Fresh;
    let grows = |b: bool| if b { Linear } else { Constant };
    match quantity {
        Quantity::ValidPackets => Linear,
        Quantity::UniqueLinks => grows(fresh_link),
        Quantity::MaxLinkPackets => grows(!fresh_link),
        Quantity::UniqueSources => grows(src == Side::Fresh),
        Quantity::MaxSourcePackets => grows(src == Side::Single),
        Quantity::MaxSourceFanout => grows(src == Side::Single && dst == Side::Fresh),
        Quantity::UniqueDestinations => grows(dst == Side::Fresh),
        Quantity::MaxDestinationPackets => grows(dst == Side::Single),
        Quantity::MaxDestinationFanin => grows(dst == Side::Single && src == Side::Fresh),
    }
}

/// Growth class of `quantity` for a balanced stream of `kind` with an
/// unbounded peer pool, restricted to `quadrant` (`None` = whole matrix).
///
/// `None` when no closed form applies: the Zipf generator, or a quadrant the
/// topology never populates.
pub fn expected_exponent(kind: TopologyKind, quantity: Quantity, quadrant: Option<Quadrant>) -> Option<ExpectedExponent> {
    match quadrant {
        Some(q) => sides(kind, q).map(|(s, d)| exponent_for(s, d, quantity)),
        None => {
            // The two directional quadrants share no sources, destinations or
            // links, so whole-matrix counts add and maxima take the larger.
            let ei = expected_exponent(kind, quantity, Some(Quadrant::ExternalToInternal))?;
            let ie = expected_exponent(kind, quantity, Some(Quadrant::InternalToExternal))?;
            Some(ei.max(ie))
        }
    }
}
