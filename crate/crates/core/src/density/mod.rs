//! Invariant density estimates from the Ulam discretization of the transfer
//! operator, and from long-orbit histograms.

mod piecewise;
mod stationary;
mod ulam;

pub use piecewise::{DensitySource, PiecewiseDensity, ShapeReport, MONOTONE_SLACK, POWER_RATIO_MAX};
pub use stationary::{
    estimate_density, stationary_density, stationary_vector, StationaryVector, DEFAULT_BINS, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
pub use ulam::{bin_edges, build_ulam_matrix, build_ulam_matrix_on, BinGrid, UlamMatrix};

use crate::error::Result;
use crate::observable::ObservableG;

/// Law of `g(X)` when `X` has density `d`.
pub fn holder_observable_cdf(d: &PiecewiseDensity, g: &ObservableG) -> Result<PiecewiseDensity> {
    d.pushforward(g)
}
