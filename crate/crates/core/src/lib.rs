//! Streaming analysis of packet source-destination pairs with hypersparse
//! traffic matrices.
//!
//! Packets are cut into windows of `N_V` valid packets ([`window`]), each
//! window becomes a [`TrafficMatrix`], windows are summed pairwise into a
//! hierarchy of power-of-two window sizes, and every window yields its
//! network [`quantities`] and logarithmically binned degree
//! [`distribution`]s. [`scaling`] fits how each quantity grows with `N_V`;
//! [`synth`] produces streams whose growth is known in closed form.

pub mod distribution;
pub mod ids;
pub mod ingest;
pub mod matrix;
pub mod quantities;
pub mod scaling;
pub mod synth;
pub mod window;

pub use distribution::{bin_distribution, window_stats, BinnedDistribution, DegreeHistogram, DistributionStats};
pub use ids::IdSet;
pub use ingest::{Anonymizer, PacketRecord, StreamFormat, ValidityFilter};
pub use matrix::{DegreeVector, TrafficMatrix};
pub use quantities::{compute_quantities, degree_vectors, DegreeKind, Quadrant, QuadrantSpec, Quantity, QuantityVector};
pub use scaling::{alignment_check, fit_scaling, LevelCurve, ScalingFit, ScalingSample, Verdict};
pub use synth::{expected_exponent, generate, ExpectedExponent, TopologyKind, TopologySpec};
pub use window::{evaluate_hierarchy, evaluate_records, AnalysisRequest, HierarchyLevelResult, WindowSpec};
