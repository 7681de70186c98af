use crate::scalar::{ceil_count, Scalar};

use super::{invalid, OracleError};

/// Happy/unhappy split of `M = H + U` particles on the complete graph `K_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnState {
    pub n: u64,
    pub happy: u64,
    pub unhappy: u64,
    pub with_loops: bool,
}

/// One-step expectations on `K_n`: `ex` happy particles hit, `ey` unhappy
/// particles landing alone, `edh = ey - ex`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnExpectations<T> {
    pub ex: T,
    pub ey: T,
    pub edh: T,
    /// Set for `K_n` without loops, where the with-loops values are reused.
    pub approximate: bool,
}

pub fn kn_expected_changes<T: Scalar>(s: KnState) -> Result<KnExpectations<T>, OracleError> {
    if s.n == 0 {
        return invalid("n must be positive");
    }
    if s.unhappy == 0 {
        return invalid("at least one unhappy particle is required");
    }
    if s.happy > s.n {
        return invalid("more happy particles than vertices");
    }
    let n = T::from_count(s.n);
    let h = T::from_count(s.happy);
    let u = T::from_count(s.unhappy);
    let miss = T::one() - n.recip();
    let ex = h * (T::one() - powu(miss, s.unhappy));
    let ey = u * ((n - h) / n) * powu(miss, s.unhappy - 1);
    Ok(KnExpectations { ex, ey, edh: ey - ex, approximate: !s.with_loops })
}

/// `E[dH]` in the factored form `(1-1/n)^U (U + H - U(H-1)/(n-1)) - H`.
pub fn kn_delta_h_closed_form<T: Scalar>(s: KnState) -> Result<T, OracleError> {
    if s.n < 2 {
        return invalid("the factored form needs n >= 2");
    }
    let n = T::from_count(s.n);
    let h = T::from_count(s.happy);
    let u = T::from_count(s.unhappy);
    let miss = T::one() - n.recip();
    Ok(powu(miss, s.unhappy) * (u + h - u * (h - T::one()) / (n - T::one())) - h)
}

/// `ceil((2/delta) ln n)`: steps after which a density `1/2 - delta` system
/// on `K_n` is expected to have dispersed.
pub fn kn_subcritical_time<T: Scalar>(n: T, delta: T) -> Result<u64, OracleError> {
    if !(delta > T::zero()) {
        return invalid("delta must be positive");
    }
    if !(n >= T::one()) {
        return invalid("n must be at least 1");
    }
    Ok(ceil_count(T::from_count(2) / delta * n.ln()))
}

pub(crate) fn powu<T: Scalar>(x: T, e: u64) -> T {
    match i32::try_from(e) {
        Ok(e) => x.powi(e),
        Err(_) => x.powf(T::from_count(e)),
    }
}
