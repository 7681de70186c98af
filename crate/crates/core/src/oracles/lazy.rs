use crate::scalar::{ceil_count, Scalar};

use super::kn::powu;
use super::{invalid, OracleError};

/// Occupancy summary of a lazy system on `K_n` (with loops).
#[derive(Debug, Clone, PartialEq)]
pub struct LazyOccupancyProfile<T> {
    pub n: u64,
    pub p: T,
    /// Occupancy `O_v >= 2` of every multiply occupied vertex.
    pub occupancies: Vec<u64>,
    /// Number of empty vertices.
    pub empty: u64,
}

impl<T: Scalar> LazyOccupancyProfile<T> {
    pub fn unhappy(&self) -> u64 {
        self.occupancies.iter().sum()
    }

    /// Vertices holding exactly one particle.
    pub fn happy(&self) -> u64 {
        self.n - self.empty - self.occupancies.len() as u64
    }

    fn validate(&self) -> Result<(), OracleError> {
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if !(self.p > T::zero() && self.p <= T::one()) {
            return invalid("p must lie in (0, 1]");
        }
        if self.occupancies.iter().any(|&o| o < 2) {
            return invalid("unhappy vertices hold at least two particles");
        }
        if self.empty.checked_add(self.occupancies.len() as u64).is_none_or(|used| used > self.n) {
            return invalid("more empty and crowded vertices than n");
        }
        Ok(())
    }
}

/// Expected one-step changes of the range (number of occupied vertices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyRangeChanges<T> {
    /// Expected empty vertices that become occupied.
    pub plus: T,
    /// Expected crowded vertices that become empty.
    pub minus: T,
}

pub fn lazy_expected_range_changes<T: Scalar>(
    prof: &LazyOccupancyProfile<T>,
) -> Result<LazyRangeChanges<T>, OracleError> {
    prof.validate()?;
    let n = T::from_count(prof.n);
    let u = prof.unhappy();
    let p = prof.p;
    let stay_away = T::one() - p / n;
    let plus = T::from_count(prof.empty) * (T::one() - powu(stay_away, u));
    let leave = T::one() - n.recip();
    let minus = prof
        .occupancies
        .iter()
        .map(|&o| powu(p, o) * powu(leave, o) * powu(stay_away, u - o))
        .fold(T::zero(), |a, b| a + b);
    Ok(LazyRangeChanges { plus, minus })
}

/// `ceil(4 ln n / (p alpha))`.
pub fn lazy_subcritical_time<T: Scalar>(n: T, p: T, alpha: T) -> Result<u64, OracleError> {
    if !(p > T::zero() && p <= T::one()) {
        return invalid("p must lie in (0, 1]");
    }
    if !(alpha > T::zero()) {
        return invalid("alpha must be positive");
    }
    if !(n >= T::one()) {
        return invalid("n must be at least 1");
    }
    Ok(ceil_count(T::from_count(4) * n.ln() / (p * alpha)))
}
