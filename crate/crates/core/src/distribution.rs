//! Degree histograms and their logarithmically binned distributions.
//!
//! Bin `i` collects degrees in `(2^(i-1), 2^i]`, with bin 0 holding exactly
//! the degree-1 nodes. The mass of bin `i` is the difference of the
//! cumulative probability at consecutive edges `2^(i-1)` and `2^i`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistributionError {
    #[error("histogram is empty; its distribution is undefined")]
    EmptyHistogram,
    #[error("no distributions to aggregate")]
    NoWindows,
}

/// Count of nodes (or links) per observed degree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    counts: BTreeMap<u64, u64>,
}

impl DegreeHistogram {
    /// Zero degrees are ignored.
    pub fn from_degrees<I: IntoIterator<Item = u64>>(degrees: I) -> Self {
        let mut counts = BTreeMap::new();
        for d in degrees.into_iter().filter(|&d| d > 0) {
            *counts.entry(d).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn count(&self, degree: u64) -> u64 {
        self.counts.get(&degree).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&d, &n)| (d, n))
    }

    /// `sum_d n(d)`.
    pub fn norm(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Largest observed degree.
    pub fn max_degree(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `p(d) = n(d) / sum_d n(d)` at each observed degree.
    pub fn probability(&self) -> Vec<(u64, f64)> {
        let norm = self.norm() as f64;
        self.iter().map(|(d, n)| (d, n as f64 / norm)).collect()
    }

    /// `P(d)`: cumulative probability at each observed degree.
    pub fn cumulative(&self) -> Vec<(u64, f64)> {
        let norm = self.norm() as f64;
        let mut running = 0u64;
        self.iter()
            .map(|(d, n)| {
                running += n;
                (d, running as f64 / norm)
            })
            .collect()
    }
}

/// Index of the logarithmic bin holding `degree` (`degree >= 1`).
#[inline]
pub fn bin_index(degree: u64) -> u32 {
    debug_assert!(degree >= 1);
    u64::BITS - (degree - 1).leading_zeros()
}

/// Upper edge `2^index` of a bin, saturating at `u64::MAX` for bin 64.
#[inline]
pub fn bin_edge(index: u32) -> u64 {
    1u64.checked_shl(index).unwrap_or(u64::MAX)
}

/// One logarithmic bin: `edge = 2^index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub index: u32,
    pub edge: u64,
    pub mass: f64,
}

/// Differential cumulative probability over logarithmic bins.
///
/// Only bins with nonzero mass are stored, in increasing index order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub bins: Vec<Bin>,
}

impl BinnedDistribution {
    pub fn mass(&self, index: u32) -> f64 {
        self.bins
            .binary_search_by_key(&index, |b| b.index)
            .map(|pos| self.bins[pos].mass)
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.bins.iter().map(|b| b.mass).sum()
    }

    /// Cumulative probability at each stored bin edge.
    pub fn cumulative(&self) -> Vec<(u64, f64)> {
        let mut running = 0.0;
        self.bins
            .iter()
            .map(|b| {
                running += b.mass;
                (b.edge, running)
            })
            .collect()
    }

    /// Index of the last bin, i.e. `ceil(log2(d_max))`.
    pub fn max_index(&self) -> Option<u32> {
        self.bins.last().map(|b| b.index)
    }
}

/// Pools the histogram into bins with edges `2^i`.
///
/// Cumulative counts are accumulated in integers at every edge, so each bin
/// mass is `(C(2^i) - C(2^(i-1))) / N` with a single rounding.
pub fn bin_distribution(h: &DegreeHistogram) -> Result<BinnedDistribution, DistributionError> {
    let norm = h.norm();
    if norm == 0 {
        return Err(DistributionError::EmptyHistogram);
    }
    let mut per_bin: BTreeMap<u32, u64> = BTreeMap::new();
    for (d, n) in h.iter() {
        *per_bin.entry(bin_index(d)).or_insert(0) += n;
    }
    let mut cumulative_prev = 0u64;
    let bins = per_bin
        .into_iter()
        .map(|(index, n)| {
            let cumulative = cumulative_prev + n;
            let mass = (cumulative - cumulative_prev) as f64 / norm as f64;
            cumulative_prev = cumulative;
            Bin {
                index,
                edge: bin_edge(index),
                mass,
            }
        })
        .collect();
    Ok(BinnedDistribution { bins })
}

/// Bins a degree list directly, skipping the per-degree histogram.
///
/// Equal to `bin_distribution(&DegreeHistogram::from_degrees(degrees))`.
pub fn distribution_of<I: IntoIterator<Item = u64>>(degrees: I) -> Result<BinnedDistribution, DistributionError> {
    let mut per_bin = [0u64; 65];
    let mut norm = 0u64;
    for d in degrees.into_iter().filter(|&d| d > 0) {
        per_bin[bin_index(d) as usize] += 1;
        norm += 1;
    }
    if norm == 0 {
        return Err(DistributionError::EmptyHistogram);
    }
    let bins = per_bin
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(index, &n)| Bin {
            index: index as u32,
            edge: bin_edge(index as u32),
            mass: n as f64 / norm as f64,
        })
        .collect();
    Ok(BinnedDistribution { bins })
}

/// Mean and population standard deviation of one bin across windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub index: u32,
    pub edge: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub bins: Vec<BinStats>,
    pub windows: usize,
}

impl DistributionStats {
    pub fn mean_total(&self) -> f64 {
        self.bins.iter().map(|b| b.mean).sum()
    }
}

/// Per-bin mean and population standard deviation over the windows.
///
/// Bins are aligned by index; a bin missing from a window counts as mass 0.
pub fn window_stats(distributions: &[BinnedDistribution]) -> Result<DistributionStats, DistributionError> {
    if distributions.is_empty() {
        return Err(DistributionError::NoWindows);
    }
    let Some(top) = distributions.iter().filter_map(|d| d.max_index()).max() else {
        return Ok(DistributionStats {
            bins: Vec::new(),
            windows: distributions.len(),
        });
    };
    let n = distributions.len() as f64;
    let mut sums = vec![0.0f64; top as usize + 1];
    let mut present = vec![false; top as usize + 1];
    for dist in distributions {
        for b in &dist.bins {
            sums[b.index as usize] += b.mass;
            present[b.index as usize] = true;
        }
    }
    let mut bins = Vec::new();
    for index in 0..=top {
        if !present[index as usize] {
            continue;
        }
        let mean = sums[index as usize] / n;
        let var = distributions
            .iter()
            .map(|d| {
                let dev = d.mass(index) - mean;
                dev * dev
            })
            .sum::<f64>()
            / n;
        bins.push(BinStats {
            index,
            edge: bin_edge(index),
            mean,
            std: var.sqrt(),
        });
    }
    Ok(DistributionStats {
        bins,
        windows: distributions.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_indices() {
        assert_eq!(bin_index(1), 0);
        assert_eq!(bin_index(2), 1);
        assert_eq!(bin_index(3), 2);
        assert_eq!(bin_index(4), 2);
        assert_eq!(bin_index(5), 3);
        assert_eq!(bin_index(8), 3);
        assert_eq!(bin_index(9), 4);
        assert_eq!(bin_index(u64::MAX), 64);
        assert_eq!(bin_index(1 << 63), 63);
    }

    #[test]
    fn histogram_counts() {
        let h = DegreeHistogram::from_degrees([2, 1]);
        assert_eq!(h.count(1), 1);
        assert_eq!(h.count(2), 1);
        assert_eq!(h.norm(), 2);
        let h = DegreeHistogram::from_degrees([5, 5, 5]);
        assert_eq!(h.count(5), 3);
        assert_eq!(h.max_degree(), Some(5));
        assert!(DegreeHistogram::from_degrees([]).is_empty());
    }

    #[test]
    fn four_bin_example() {
        let mut degrees = vec![1; 6];
        degrees.extend([2, 2, 3, 8]);
        let dist = distribution_of(degrees).unwrap();
        let got: Vec<(u32, u64, f64)> = dist.bins.iter().map(|b| (b.index, b.edge, b.mass)).collect();
        assert_eq!(got, vec![(0, 1, 0.6), (1, 2, 0.2), (2, 4, 0.1), (3, 8, 0.1)]);
    }

    #[test]
    fn single_bin_cases() {
        let leaves = distribution_of(vec![1; 37]).unwrap();
        assert_eq!(leaves.bins, vec![Bin { index: 0, edge: 1, mass: 1.0 }]);
        for j in [1u32, 5, 20] {
            let dist = distribution_of([1u64 << j]).unwrap();
            assert_eq!(dist.bins, vec![Bin { index: j, edge: 1 << j, mass: 1.0 }]);
        }
    }

    #[test]
    fn direct_binning_matches_histogram_route() {
        let degrees = [1u64, 1, 3, 4, 5, 9, 1 << 40, u64::MAX, 2];
        let via_hist = bin_distribution(&DegreeHistogram::from_degrees(degrees)).unwrap();
        assert_eq!(distribution_of(degrees).unwrap(), via_hist);
        assert_eq!(distribution_of([]), Err(DistributionError::EmptyHistogram));
    }

    #[test]
    fn empty_histogram_is_an_error() {
        assert_eq!(
            bin_distribution(&DegreeHistogram::default()),
            Err(DistributionError::EmptyHistogram)
        );
    }

    #[test]
    fn stats_two_point() {
        let a = BinnedDistribution {
            bins: vec![Bin { index: 0, edge: 1, mass: 0.4 }, Bin { index: 1, edge: 2, mass: 0.6 }],
        };
        let b = BinnedDistribution {
            bins: vec![Bin { index: 0, edge: 1, mass: 0.6 }, Bin { index: 1, edge: 2, mass: 0.4 }],
        };
        let s = window_stats(&[a, b]).unwrap();
        assert_eq!(s.windows, 2);
        assert!((s.bins[0].mean - 0.5).abs() < 1e-15);
        assert!((s.bins[0].std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn stats_identical_and_single() {
        let d = distribution_of([1, 1, 2, 7, 100]).unwrap();
        let s = window_stats(&vec![d.clone(); 1024]).unwrap();
        assert_eq!(s.windows, 1024);
        for (b, st) in d.bins.iter().zip(&s.bins) {
            assert!((b.mass - st.mean).abs() < 1e-12);
            assert!(st.std < 1e-12);
        }
        let s = window_stats(std::slice::from_ref(&d)).unwrap();
        for (b, st) in d.bins.iter().zip(&s.bins) {
            assert_eq!(b.mass, st.mean);
            assert_eq!(st.std, 0.0);
        }
        assert_eq!(window_stats(&[]), Err(DistributionError::NoWindows));
    }

    #[test]
    fn stats_missing_bins_count_as_zero() {
        let a = distribution_of([1]).unwrap();
        let b = distribution_of([4]).unwrap();
        let s = window_stats(&[a, b]).unwrap();
        assert_eq!(s.bins.len(), 2);
        assert_eq!((s.bins[0].index, s.bins[0].mean, s.bins[0].std), (0, 0.5, 0.5));
        assert_eq!((s.bins[1].index, s.bins[1].mean, s.bins[1].std), (2, 0.5, 0.5));
        assert!((s.mean_total() - 1.0).abs() < 1e-12);
    }
}
