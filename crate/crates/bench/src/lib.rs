//! Shared inputs for the criterion benchmarks.

use netscale_core::synth::{TopologyKind, TopologySpec, TopologyStream};
use netscale_core::PacketRecord;

/// A reproducible heavy-tailed stream of `packets` records.
pub fn zipf_stream(packets: u64, seed: u64) -> Vec<PacketRecord> {
    let spec = TopologySpec::new(TopologyKind::Zipf, packets)
        .with_zipf(1.0, 1 << 20)
        .balanced()
        .with_seed(seed);
    TopologyStream::new(spec).expect("valid spec").collect()
}
