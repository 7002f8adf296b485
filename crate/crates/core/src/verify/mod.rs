//! Exact expectations over enumerated profiles and the property harness.
//!
//! Every check returns a [`CheckReport`]. Failures carry a [`Witness`]
//! that the matching `replay` function reproduces exactly.

pub mod exact;
pub mod identities;
pub mod incentives;
pub mod metrics;
pub mod oracle;
pub mod reference;
pub mod report;
pub mod structural;
pub mod suite;

pub use exact::{decomposition, Decomposition};
pub use identities::{check_identities, single_edge_bound, SingleEdgeBound};
pub use incentives::{check_incentives, deviation_grid, replay, CheckKind};
pub use metrics::{expected_metrics, first_best_gft, monte_carlo_metrics, ratio, McEstimate, Metrics};
pub use report::{CheckReport, Report, ReportMetrics, Tolerance, Witness};

/// Denominator of the approximation bound.
pub const APPROX: f64 = 3.15;
