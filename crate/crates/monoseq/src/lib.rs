//! Numerical engine for optimal online selection of a monotone subsequence.
//!
//! An observer sees n independent draws one at a time and must accept or
//! reject each on arrival, keeping the accepted values non-decreasing.  This
//! crate computes the optimal policy exactly by dynamic programming on a
//! grid, simulates it with reproducible parallel randomness, and verifies
//! the theory it implements: mean bounds, variance bounds, a central limit
//! check, and a martingale decomposition of the selection count.
//!
//! Modules:
//! - [`distribution`]: observation models and the uniform/exponential
//!   coordinate dictionary.
//! - [`value`]: value functions v_k, thresholds h_k, critical values, and
//!   derivatives on a grid.
//! - [`closed_form`]: independent hand-integrated oracle for k <= 3.
//! - [`variance`]: conditional-variance table and the martingale A/B
//!   components.
//! - [`simulate`]: policy simulator with full traces, deterministic batch
//!   runs, Poisson horizons, and the offline baseline.
//! - [`stats`]: summaries, CLT normalization, KS distance, bound and
//!   property reports.
//! - [`export`]: CSV and JSON writers for tables, traces, and reports.

pub mod closed_form;
pub mod distribution;
pub mod error;
pub mod export;
pub mod grid;
pub mod properties;
pub mod simulate;
pub mod stats;
pub mod value;
pub mod variance;

pub use error::{Error, Result};
pub use export::RunReport;
pub use grid::{GridSpec, DEFAULT_GRID_POINTS, DEFAULT_ROOT_TOLERANCE, MIN_GRID_POINTS};
pub use properties::{property_report, PropertyRecord};
pub use simulate::{
    coupled_invariance_check, episode_from_draws, offline_lis, simulate_batch,
    simulate_batch_with_series, simulate_episode, simulate_poisson_batch, simulate_poisson_horizon,
    EpisodeTrace, RngStream,
};
pub use stats::{
    bound_report, centered_statistic, clt_statistic, histogram_of, ks_to_standard_normal,
    standard_normal_cdf, summarize, BoundReport, BoundRow, Histogram, MonteCarloSummary,
};
pub use value::{
    build_value_table, critical_value, derivative_at, exponential_threshold_at,
    exponential_value_at, threshold_at, value_at, ValueTable,
};
pub use variance::{
    ab_components, build_variance_table, conditional_variance_series, drift_at, variance_at,
    AbParts, VarianceTable,
};
