use crate::scalar::Scalar;

use super::{invalid, OracleError};

/// Depth bounds for the infinite path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathBounds<T> {
    /// `floor(M/2)`, forced by pigeonhole.
    pub lower: u64,
    /// `4 (1 + eps) M ln M`.
    pub upper: T,
}

pub fn path_distance_bounds<T: Scalar>(particles: u64, eps: T) -> Result<PathBounds<T>, OracleError> {
    if particles < 2 {
        return invalid("at least two particles are required");
    }
    if !(eps > T::zero()) {
        return invalid("eps must be positive");
    }
    let m = T::from_count(particles);
    Ok(PathBounds { lower: particles / 2, upper: T::from_count(4) * (T::one() + eps) * m * m.ln() })
}

/// `M^3 ln M`: dispersal time bound on the path.
pub fn path_time_bound<T: Scalar>(particles: u64) -> T {
    let m = T::from_count(particles);
    m * m * m * m.ln()
}

/// `6 M ln M`: bound on how far any particle strays on the path.
pub fn path_excursion_bound<T: Scalar>(particles: u64) -> T {
    let m = T::from_count(particles);
    T::from_count(6) * m * m.ln()
}

/// `2 omega M^2 ln M`: dispersal time on the 2-D grid.
pub fn grid_dispersal_time<T: Scalar>(particles: u64, omega: T) -> T {
    let m = T::from_count(particles);
    (T::one() + T::one()) * omega * m * m * m.ln()
}

/// `(M/2)(d^3/4)`: dispersal time on the `d`-cube.
pub fn hypercube_dispersal_time<T: Scalar>(particles: u64, d: u32) -> T {
    let d = T::from_count(u64::from(d));
    T::from_count(particles) / T::from_count(2) * (d * d * d / T::from_count(4))
}

/// `d/2`: no particle strays further on the `d`-cube.
pub fn hypercube_distance_bound<T: Scalar>(d: u32) -> T {
    T::from_count(u64::from(d)) / T::from_count(2)
}
