//! Closed-form expectations, probabilities and bounds for the dispersion
//! process, used as ground truth by the tests and the validation suite.
//!
//! Real-valued oracles are generic over [`Scalar`](crate::Scalar). The
//! lattice-walk return counts are exact [`Rational`](crate::Rational)s.
//! Every logarithm is natural.

mod bounds;
mod kn;
mod lazy;
mod mixing;
mod tree;
mod walks;

use thiserror::Error;

use crate::topology::{Family, TopologyError};

pub use bounds::{
    grid_dispersal_time, hypercube_dispersal_time, hypercube_distance_bound, path_distance_bounds,
    path_excursion_bound, path_time_bound, PathBounds,
};
pub use kn::{kn_delta_h_closed_form, kn_expected_changes, kn_subcritical_time, KnExpectations, KnState};
pub use lazy::{lazy_expected_range_changes, lazy_subcritical_time, LazyOccupancyProfile, LazyRangeChanges};
pub use mixing::{mixing_step, MIXING_ORDER_CAP};
pub use tree::{
    tree_constants, tree_default_leaf_depth, tree_depth_bounds, tree_ruin_probability, DepthBounds,
    TreeConstants, DEFAULT_LEAF_DEPTH_EPS, DEFAULT_LEAF_DEPTH_SLACK,
};
pub use walks::{
    binomial_big, grid2d_expected_returns, hypercube_return_probability, line_returns_pmf, line_returns_tail,
    LineTail,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error("{0} graphs are not supported by this oracle")]
    Unsupported(Family),
    #[error("graph order {order} exceeds the exact-computation cap {cap}")]
    OverCap { order: u64, cap: u64 },
    #[error("graph is disconnected; the walk never mixes")]
    Disconnected,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, OracleError> {
    Err(OracleError::InvalidInput(msg.into()))
}

#[cfg(test)]
mod tests;
