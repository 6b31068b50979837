//! Brute-force reference implementations used as test oracles.
//!
//! Everything here works on the explicit record list with nested loops and
//! never touches `TrafficMatrix` or its kernels.

#![allow(dead_code)]

use netscale_core::synth::ZipfTable;
use netscale_core::{PacketRecord, QuantityVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForce {
    pub quantities: QuantityVector,
    /// `(id, degree)` sorted by id.
    pub source_packets: Vec<(u64, u64)>,
    pub source_fanout: Vec<(u64, u64)>,
    pub destination_packets: Vec<(u64, u64)>,
    pub destination_fanin: Vec<(u64, u64)>,
    /// Sorted ascending.
    pub link_packets: Vec<u64>,
    /// `((src, dst), packets)` sorted by coordinate.
    pub links: Vec<((u64, u64), u64)>,
}

pub fn brute_force(records: &[PacketRecord]) -> BruteForce {
    let mut links: Vec<((u64, u64), u64)> = Vec::new();
    for r in records {
        let key = (r.src, r.dst);
        let mut found = false;
        for link in links.iter_mut() {
            if link.0 == key {
                link.1 += 1;
                found = true;
                break;
            }
        }
        if !found {
            links.push((key, 1));
        }
    }

    // (id, packets, distinct partners)
    let mut sources: Vec<(u64, u64, u64)> = Vec::new();
    let mut destinations: Vec<(u64, u64, u64)> = Vec::new();
    for &((src, dst), packets) in &links {
        match sources.iter_mut().find(|s| s.0 == src) {
            Some(s) => {
                s.1 += packets;
                s.2 += 1;
            }
            None => sources.push((src, packets, 1)),
        }
        match destinations.iter_mut().find(|d| d.0 == dst) {
            Some(d) => {
                d.1 += packets;
                d.2 += 1;
            }
            None => destinations.push((dst, packets, 1)),
        }
    }

    let mut valid = 0;
    for _ in records {
        valid += 1;
    }
    let quantities = QuantityVector {
        valid_packets: valid,
        unique_links: links.len() as u64,
        max_link_packets: links.iter().map(|l| l.1).max().unwrap_or(0),
        unique_sources: sources.len() as u64,
        max_source_packets: sources.iter().map(|s| s.1).max().unwrap_or(0),
        max_source_fanout: sources.iter().map(|s| s.2).max().unwrap_or(0),
        unique_destinations: destinations.len() as u64,
        max_destination_packets: destinations.iter().map(|d| d.1).max().unwrap_or(0),
        max_destination_fanin: destinations.iter().map(|d| d.2).max().unwrap_or(0),
    };

    sources.sort_unstable();
    destinations.sort_unstable();
    links.sort_unstable();
    let mut link_packets: Vec<u64> = links.iter().map(|l| l.1).collect();
    link_packets.sort_unstable();
    BruteForce {
        quantities,
        source_packets: sources.iter().map(|s| (s.0, s.1)).collect(),
        source_fanout: sources.iter().map(|s| (s.0, s.2)).collect(),
        destination_packets: destinations.iter().map(|d| (d.0, d.1)).collect(),
        destination_fanin: destinations.iter().map(|d| (d.0, d.2)).collect(),
        link_packets,
        links,
    }
}

/// Differential cumulative probability straight from the definitions:
/// `p(d) = n(d)/N`, `P(d) = sum_{k<=d} p(k)`, `D_i = P(2^i) - P(2^(i-1))`,
/// bin 0 = `P(1)`. Returns `(i, D_i)` for bins with nonzero mass.
pub fn brute_binned(degrees: &[u64]) -> Vec<(u32, f64)> {
    let total = degrees.len() as f64;
    let d_max = degrees.iter().copied().max().unwrap_or(0);
    let cumulative = |edge: u64| -> f64 {
        let mut p = 0.0;
        for &d in degrees {
            if d <= edge {
                p += 1.0 / total;
            }
        }
        p
    };
    let mut out = Vec::new();
    let mut i = 0u32;
    let mut prev = 0.0;
    loop {
        let edge = 1u64 << i;
        let here = cumulative(edge);
        let mass = here - prev;
        if degrees.iter().any(|&d| d <= edge && (i == 0 || d > edge / 2)) {
            out.push((i, mass));
        }
        prev = here;
        if edge >= d_max {
            break;
        }
        i += 1;
    }
    out
}

/// Uniform draws of sources and destinations from pools of the given sizes,
/// scattered across the 64-bit ID space.
pub fn uniform_stream(rng: &mut ChaCha8Rng, packets: usize, sources: u64, destinations: u64) -> Vec<PacketRecord> {
    let scatter = |x: u64| x.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5555;
    (0..packets)
        .map(|_| {
            let s = rng.gen_range(0..sources);
            let d = rng.gen_range(0..destinations);
            PacketRecord::new(scatter(s), scatter(d + (1 << 40)))
        })
        .collect()
}

pub fn zipf_stream(rng: &mut ChaCha8Rng, packets: usize, exponent: f64, population: u64) -> Vec<PacketRecord> {
    let table = ZipfTable::new(exponent, population);
    (0..packets)
        .map(|_| PacketRecord::new(table.sample(rng), table.sample(rng) + population / 2))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
