//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{brute_force, rng, uniform_stream, zipf_stream};
use netscale_core::distribution::{distribution_of, BinnedDistribution};
use netscale_core::ingest::{anonymize, Anonymizer};
use netscale_core::quantities::{degrees_of, quadrant};
use netscale_core::scaling::{alignment_check, fit_scaling, LevelCurve, ScalingSample};
use netscale_core::synth::{internal_set, TopologyStream};
use netscale_core::window::HierarchyLevelResult;
use netscale_core::*;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 hierarchy consistency", hierarchy_consistency),
        ("3 distribution conservation", distribution_conservation),
        ("4 topology scaling oracles", topology_scaling),
        ("5 sublinear regime", sublinear_regime),
        ("6 quadrant partition", quadrant_partition),
        ("7 anonymization invariance", anonymization_invariance),
        ("8 performance contract", performance_contract),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn keep_all() -> AnalysisRequest {
    AnalysisRequest {
        keep_matrices: true,
        ..AnalysisRequest::full()
    }
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

/// 100 random streams of one 4096-packet window each, half uniform and half
/// Zipf, compared field by field with the nested-loop oracle.
fn oracle_equivalence() -> Outcome {
    const N_V: u64 = 4096;
    let start = Instant::now();
    let mut g = rng(1);
    let spec = WindowSpec::new(N_V, 1);
    for trial in 0..100 {
        let stream = if trial % 2 == 0 {
            let (s, d) = (g.gen_range(8..600), g.gen_range(8..600));
            uniform_stream(&mut g, N_V as usize, s, d)
        } else {
            let exponent = g.gen_range(0.6..1.6);
            zipf_stream(&mut g, N_V as usize, exponent, 1 << 16)
        };
        let (levels, _) = evaluate_records(stream.iter().copied(), &spec, &keep_all(), 1).map_err(|e| e.to_string())?;
        let window = &levels[0].windows[0];
        let matrix = window.matrix.as_deref().ok_or("matrix not kept")?;
        let brute = brute_force(&stream);
        ensure!(window.quantities == brute.quantities, "trial {trial}: quantities differ");
        let d = degree_vectors(matrix);
        ensure!(d.source_packets.entries() == &brute.source_packets[..], "trial {trial}: source packets");
        ensure!(d.source_fanout.entries() == &brute.source_fanout[..], "trial {trial}: source fan-out");
        ensure!(d.destination_packets.entries() == &brute.destination_packets[..], "trial {trial}: destination packets");
        ensure!(d.destination_fanin.entries() == &brute.destination_fanin[..], "trial {trial}: destination fan-in");
        ensure!(sorted(d.link_packets) == brute.link_packets, "trial {trial}: link packets");
        let coords: Vec<((u64, u64), u64)> = matrix.entries().iter().map(|e| ((e.row, e.col), e.value)).collect();
        ensure!(coords == brute.links, "trial {trial}: matrix entries");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}, budget 10s");
    Ok(format!("100/100 streams exact, {:.2}s", elapsed.as_secs_f64()))
}

fn hierarchy_streams() -> Vec<Vec<PacketRecord>> {
    let mut g = rng(2);
    let len = (2 << 16) + 777;
    vec![uniform_stream(&mut g, len, 2000, 2000), zipf_stream(&mut g, len, 1.1, 1 << 20)]
}

fn hierarchy_consistency() -> Outcome {
    let spec = WindowSpec::new(256, 9);
    let mut checked = 0;
    for stream in hierarchy_streams() {
        let (levels, _) = evaluate_records(stream.iter().copied(), &spec, &keep_all(), 1).map_err(|e| e.to_string())?;
        for level in &levels {
            let size = level.window_size as usize;
            ensure!(level.window_size == 256 << level.level, "level {} size", level.level);
            ensure!(level.windows.len() == stream.len() / size, "level {} window count", level.level);
            for w in &level.windows {
                let span = &stream[w.index as usize * size..(w.index as usize + 1) * size];
                let direct = TrafficMatrix::from_records(span.iter().copied());
                ensure!(w.matrix.as_deref() == Some(&direct), "level {} window {} entries", w.level, w.index);
                ensure!(direct.total() == level.window_size, "level {} total", w.level);
                ensure!(w.quantities == compute_quantities(&direct), "level {} window {} quantities", w.level, w.index);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} windows over levels 0..=8 equal direct construction"))
}

fn conserved(dist: &BinnedDistribution) -> Result<(), String> {
    ensure!((dist.total_mass() - 1.0).abs() <= 1e-12, "mass {}", dist.total_mass());
    ensure!(dist.bins.iter().all(|b| b.mass >= 0.0), "negative mass");
    let cum = dist.cumulative();
    ensure!(cum.windows(2).all(|w| w[0].1 <= w[1].1), "cumulative decreases");
    Ok(())
}

fn distribution_conservation() -> Outcome {
    let mut degrees = vec![1u64; 6];
    degrees.extend([2, 2, 3, 8]);
    let worked = distribution_of(degrees).map_err(|e| e.to_string())?;
    let got: Vec<(u32, u64, f64)> = worked.bins.iter().map(|b| (b.index, b.edge, b.mass)).collect();
    ensure!(
        got == vec![(0, 1, 0.6), (1, 2, 0.2), (2, 4, 0.1), (3, 8, 0.1)],
        "worked example gave {got:?}"
    );

    let mut checked = 0;
    let spec = WindowSpec::new(256, 9);
    for stream in hierarchy_streams() {
        let (levels, _) = evaluate_records(stream, &spec, &AnalysisRequest::full(), 1).map_err(|e| e.to_string())?;
        for w in levels.iter().flat_map(|l| &l.windows) {
            for (kind, dist) in &w.distributions {
                let dist = dist.as_ref().ok_or_else(|| format!("{kind} missing"))?;
                conserved(dist).map_err(|e| format!("level {} window {} {kind}: {e}", w.level, w.index))?;
                checked += 1;
            }
        }
    }
    for kind in TopologyKind::SIMPLE {
        let s = generate(&TopologySpec::new(kind, 1 << 14).balanced()).map_err(|e| e.to_string())?;
        let (levels, _) = evaluate_records(s.records, &WindowSpec::new(1 << 10, 5), &AnalysisRequest::full(), 1)
            .map_err(|e| e.to_string())?;
        for w in levels.iter().flat_map(|l| &l.windows) {
            for (_, dist) in &w.distributions {
                conserved(dist.as_ref().ok_or("missing")?)?;
                checked += 1;
            }
        }
    }
    Ok(format!("worked example exact; {checked} window distributions sum to 1 within 1e-12"))
}

fn level_samples(levels: &[HierarchyLevelResult], q: Quantity) -> Vec<ScalingSample> {
    levels
        .iter()
        .map(|l| ScalingSample::from_values(l.window_size, &l.quantity_series(q)))
        .collect()
}

fn topology_scaling() -> Outcome {
    let start = Instant::now();
    let spec = WindowSpec::new(1 << 10, 7);
    let quadrants = [None, Some(Quadrant::ExternalToInternal), Some(Quadrant::InternalToExternal)];
    let mut fits = 0;
    let mut worst: f64 = 0.0;
    for kind in TopologyKind::SIMPLE {
        let stream = generate(&TopologySpec::new(kind, 1 << 18).balanced()).map_err(|e| e.to_string())?;
        for q in quadrants {
            let mut request = AnalysisRequest::default();
            if let Some(q) = q {
                request = request.with_quadrant(QuadrantSpec::new(stream.internal.clone(), q));
            }
            let (levels, _) = evaluate_records(stream.records.iter().copied(), &spec, &request, 1).map_err(|e| e.to_string())?;
            for quantity in Quantity::ALL {
                let Some(expected) = expected_exponent(kind, quantity, q) else {
                    continue;
                };
                let expected = expected.value();
                ensure!(expected == 0.0 || expected == 1.0, "expected exponent {expected}");
                let fit = fit_scaling(&level_samples(&levels, quantity)).map_err(|e| format!("{kind} {quantity}: {e}"))?;
                let err = (fit.exponent - expected).abs();
                worst = worst.max(err);
                let label = q.map_or("all".to_string(), |q| q.to_string());
                ensure!(
                    err <= 0.05,
                    "{kind} {label} {quantity}: alpha {:.4}, expected {expected}",
                    fit.exponent
                );
                fits += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}, budget 60s");
    Ok(format!("{fits} fits over N_V 2^10..2^16, max |alpha - expected| = {worst:.2e}"))
}

fn sublinear_regime() -> Outcome {
    let spec = TopologySpec::new(TopologyKind::Zipf, 1 << 22).with_zipf(1.0, 1 << 24).with_seed(5);
    let stream = TopologyStream::new(spec).map_err(|e| e.to_string())?;
    // N_V from 2^12 to 2^19: eight window sizes, at least eight top-level windows.
    let window = WindowSpec::new(1 << 12, 8);
    let (levels, _) = evaluate_records(stream, &window, &AnalysisRequest::default(), 4).map_err(|e| e.to_string())?;
    let fit = fit_scaling(&level_samples(&levels, Quantity::UniqueSources)).map_err(|e| e.to_string())?;
    ensure!(
        fit.exponent > 0.3 && fit.exponent < 0.9,
        "unique-sources alpha {:.4} outside (0.3, 0.9)",
        fit.exponent
    );
    let curves: Vec<LevelCurve> = levels
        .iter()
        .map(|l| LevelCurve {
            window_size: l.window_size,
            values: l
                .quantity_series(Quantity::UniqueSources)
                .into_iter()
                .map(|v| v / l.window_size as f64)
                .collect(),
        })
        .collect();
    let beta = 1.0 - fit.exponent;
    let dispersion = alignment_check(&curves, beta, window.base_window).map_err(|e| e.to_string())?;
    let raw = alignment_check(&curves, 0.0, window.base_window).map_err(|e| e.to_string())?;
    ensure!(dispersion < 0.05, "dispersion {dispersion:.4} at beta {beta:.4}");
    Ok(format!(
        "alpha {:.4} (rms {:.4}); dispersion {:.2}% at beta {:.4} vs {:.1}% unscaled",
        fit.exponent,
        fit.residual,
        100.0 * dispersion,
        beta,
        100.0 * raw
    ))
}

fn quadrant_partition() -> Outcome {
    let mut g = rng(6);
    for trial in 0..300 {
        let pool = g.gen_range(4..400u64);
        let stream: Vec<PacketRecord> = (0..g.gen_range(0..3000))
            .map(|_| PacketRecord::new(g.gen_range(0..pool), g.gen_range(0..pool)))
            .collect();
        let a = TrafficMatrix::from_records(stream);
        let mut internal = IdSet::new();
        for _ in 0..g.gen_range(0..20) {
            internal.insert(g.gen_range(0..pool));
        }
        if g.gen_bool(0.5) {
            let lo = g.gen_range(0..pool);
            internal.insert_range(lo..=lo + g.gen_range(0..pool));
        }
        let parts: Vec<TrafficMatrix> = Quadrant::ALL
            .iter()
            .map(|&q| quadrant(&a, &QuadrantSpec::new(internal.clone(), q)))
            .collect();
        let mut sum = TrafficMatrix::new();
        for p in &parts {
            ensure!(
                p.entries().iter().all(|e| sum.get(e.row, e.col) == 0),
                "trial {trial}: quadrants overlap"
            );
            sum = sum.add(p).map_err(|e| e.to_string())?;
        }
        ensure!(sum == a, "trial {trial}: quadrants do not sum to the matrix");
    }
    Ok("300 random matrices: quadrants disjoint and sum to the original".into())
}

fn anonymization_invariance() -> Outcome {
    let mut g = rng(7);
    let spec = WindowSpec::new(512, 5);
    for trial in 0..10 {
        let stream = if trial % 2 == 0 {
            uniform_stream(&mut g, 1 << 14, 700, 900)
        } else {
            zipf_stream(&mut g, 1 << 14, 1.0, 1 << 18)
        };
        let anon = Anonymizer::new(g.gen());
        let (before, _) = evaluate_records(stream.iter().copied(), &spec, &AnalysisRequest::full(), 1).map_err(|e| e.to_string())?;
        let (after, _) =
            evaluate_records(anonymize(stream.iter().copied(), &anon), &spec, &AnalysisRequest::full(), 1).map_err(|e| e.to_string())?;
        ensure!(before == after, "trial {trial}: results changed under anonymization");
        let a = TrafficMatrix::from_records(stream.iter().copied());
        let b = TrafficMatrix::from_records(anonymize(stream, &anon));
        for kind in DegreeKind::ALL {
            ensure!(
                sorted(degrees_of(&a, kind)) == sorted(degrees_of(&b, kind)),
                "trial {trial}: {kind} degree multiset changed"
            );
        }
    }
    Ok("10 streams: quantities and binned distributions identical at every level".into())
}

fn performance_contract() -> Outcome {
    const PACKETS: u64 = 10_000_000;
    let spec = WindowSpec::new(1 << 12, 9);
    let topology = TopologySpec::new(TopologyKind::Zipf, PACKETS)
        .with_zipf(1.0, 1 << 20)
        .balanced()
        .with_seed(8);
    let request = AnalysisRequest::full().with_quadrant(QuadrantSpec::new(internal_set(), Quadrant::ExternalToInternal));
    let full = AnalysisRequest::full();

    let start = Instant::now();
    let stream = TopologyStream::new(topology.clone()).map_err(|e| e.to_string())?;
    let (single, summary) = evaluate_records(stream, &spec, &full, 1).map_err(|e| e.to_string())?;
    let single_secs = start.elapsed().as_secs_f64();
    ensure!(single_secs < 60.0, "single-threaded run took {single_secs:.1}s, budget 60s");
    ensure!(summary.records == PACKETS, "consumed {} records", summary.records);
    ensure!(
        summary.peak_resident_matrices <= spec.levels as usize + 1,
        "peak resident matrices {} > L+1",
        summary.peak_resident_matrices
    );

    let stream = TopologyStream::new(topology.clone()).map_err(|e| e.to_string())?;
    let (multi, _) = evaluate_records(stream, &spec, &full, 4).map_err(|e| e.to_string())?;
    ensure!(single == multi, "4-thread results differ from single-threaded");

    // Quadrant-restricted analysis is deterministic across thread counts too.
    let head = || TopologyStream::new(topology.clone()).expect("valid").take(1 << 20);
    let (q1, _) = evaluate_records(head(), &spec, &request, 1).map_err(|e| e.to_string())?;
    let (q3, _) = evaluate_records(head(), &spec, &request, 3).map_err(|e| e.to_string())?;
    ensure!(q1 == q3, "quadrant results depend on thread count");

    // Footprint tracks stored entries, not ID magnitude: the same structure
    // spread over the full 64-bit range costs the same bytes.
    let compact: Vec<PacketRecord> = head().take(1 << 16).collect();
    let spread = |x: u64| x.wrapping_mul(0xd6e8_feb8_6659_fd93) | (1 << 63);
    let wide: Vec<PacketRecord> = compact.iter().map(|r| PacketRecord::new(spread(r.src), spread(r.dst))).collect();
    let (a, b) = (TrafficMatrix::from_records(compact), TrafficMatrix::from_records(wide));
    ensure!(a.nnz() == b.nnz(), "relabeling changed nnz");
    ensure!(a.heap_bytes() == b.heap_bytes(), "footprint depends on ID extent");
    ensure!(a.heap_bytes() == a.nnz() as usize * 24, "footprint {} for nnz {}", a.heap_bytes(), a.nnz());

    Ok(format!(
        "10^7 packets, N_V 2^12..2^20: single-threaded {single_secs:.1}s; 4 threads identical; peak {} resident matrices",
        summary.peak_resident_matrices
    ))
}
