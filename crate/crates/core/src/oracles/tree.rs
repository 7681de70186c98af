use crate::scalar::{ceil_count, Scalar};

use super::kn::powu;
use super::{invalid, OracleError};

/// `eps` used by the default leaf-depth rule.
pub const DEFAULT_LEAF_DEPTH_EPS: f64 = 0.25;
/// Levels added below the upper depth bound by the default leaf-depth rule.
pub const DEFAULT_LEAF_DEPTH_SLACK: u32 = 8;

/// Depth constants of the `k`-regular tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConstants<T> {
    pub k: u32,
    pub alpha: T,
    pub beta: T,
}

/// Lower and upper bound on the dispersal depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthBounds<T> {
    pub lower: T,
    pub upper: T,
}

fn log_base_km1<T: Scalar>(k: u32, x: T) -> T {
    x.ln() / T::from_count(u64::from(k) - 1).ln()
}

/// `alpha_k = 1 - 1/(2 L - 1)` and `beta_k = 1/3 - 1/(3 L)` with
/// `L = log_{k-1} k`.
pub fn tree_constants<T: Scalar>(k: u32) -> Result<TreeConstants<T>, OracleError> {
    if k < 3 {
        return invalid("tree degree must be at least 3");
    }
    let l = log_base_km1(k, T::from_count(u64::from(k)));
    let one = T::one();
    let two = one + one;
    let three = two + one;
    Ok(TreeConstants {
        k,
        alpha: one - (two * l - one).recip(),
        beta: three.recip() - (three * l).recip(),
    })
}

/// `(2 - alpha_k - eps) log_{k-1} M` and `(2 - beta_k + 2 eps) log_{k-1} M`.
pub fn tree_depth_bounds<T: Scalar>(k: u32, particles: u64, eps: T) -> Result<DepthBounds<T>, OracleError> {
    if particles < 2 {
        return invalid("at least two particles are required");
    }
    if eps < T::zero() {
        return invalid("eps must be non-negative");
    }
    let c = tree_constants::<T>(k)?;
    let two = T::one() + T::one();
    let lg = log_base_km1(k, T::from_count(particles));
    Ok(DepthBounds {
        lower: (two - c.alpha - eps) * lg,
        upper: (two - c.beta + two * eps) * lg,
    })
}

/// Truncation depth used when a tree experiment leaves it unset: the upper
/// depth bound at `eps = 0.25`, rounded up, plus 8 levels.
pub fn tree_default_leaf_depth(k: u32, particles: u64) -> Result<u32, OracleError> {
    let b = tree_depth_bounds::<f64>(k, particles.max(2), DEFAULT_LEAF_DEPTH_EPS)?;
    let depth = ceil_count(b.upper) + u64::from(DEFAULT_LEAF_DEPTH_SLACK);
    u32::try_from(depth).or_else(|_| invalid("leaf depth out of range"))
}

/// Probability that a walk at distance `d` below a vertex ever climbs to it:
/// `(1/(k-1))^d`.
pub fn tree_ruin_probability<T: Scalar>(k: u32, d: u64) -> Result<T, OracleError> {
    if k < 3 {
        return invalid("tree degree must be at least 3");
    }
    Ok(powu(T::from_count(u64::from(k) - 1).recip(), d))
}
