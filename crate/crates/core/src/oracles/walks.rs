use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::Scalar;
use crate::Rational;

use super::kn::powu;
use super::{invalid, OracleError};

/// `C(n, k)` as a big integer.
pub fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << usize::try_from(e).expect("exponent fits usize")
}

/// Probability that a simple walk on Z returns to 0 exactly `r` times in
/// `2T` steps: `C(2T - r, T) / 2^(2T - r)`.
pub fn line_returns_pmf(t: u64, r: u64) -> Result<Rational, OracleError> {
    if t == 0 {
        return invalid("T must be at least 1");
    }
    if r > t {
        return invalid("at most T returns fit in 2T steps");
    }
    let m = 2 * t - r;
    Ok(Rational::new(binomial_big(m, t), pow2(m)))
}

/// Tail of the return count together with the geometric bound on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTail<T> {
    /// `P(at least r returns in 2T steps)`.
    pub exact: Rational,
    /// `pmf(r) (2T - r) / r`, or `+inf` at `r = 0`.
    pub bound: T,
}

pub fn line_returns_tail<T: Scalar>(t: u64, r: u64) -> Result<LineTail<T>, OracleError> {
    let first = line_returns_pmf(t, r)?;
    let mut exact = first.clone();
    for s in r + 1..=t {
        exact += line_returns_pmf(t, s)?;
    }
    let bound = if r == 0 {
        T::infinity()
    } else {
        let b = first * Rational::new(BigInt::from(2 * t - r), BigInt::from(r));
        T::from_f64_lossy(b.to_f64().unwrap_or(f64::INFINITY))
    };
    Ok(LineTail { exact, bound })
}

/// Expected returns to the origin of the simple walk on Z^2 within `2t`
/// steps: `sum_{s=0}^{t} (C(2s, s) / 4^s)^2`.
pub fn grid2d_expected_returns<T: Scalar>(t: u64) -> T {
    let mut a = T::one();
    let mut sum = T::one();
    for s in 1..=t {
        let s = T::from_count(s);
        let two = T::one() + T::one();
        a = a * (two * s - T::one()) / (two * s);
        sum = sum + a * a;
    }
    sum
}

/// `P^s(u, u)` for the simple walk on the `d`-cube:
/// `2^-d sum_k C(d, k) ((d - 2k)/d)^s`.
pub fn hypercube_return_probability<T: Scalar>(d: u32, s: u64) -> Result<T, OracleError> {
    if d == 0 || d > 63 {
        return invalid("dimension must lie in 1..=63");
    }
    if s % 2 == 1 {
        return Ok(T::zero());
    }
    let dd = u64::from(d);
    let df = T::from_count(dd);
    let two = T::one() + T::one();
    // terms k and d-k coincide for even s
    let mut sum = T::zero();
    for k in 0..=dd {
        let lambda = (df - two * T::from_count(k)) / df;
        let c = binomial_big(dd, k).to_f64().map_or_else(T::infinity, T::from_f64_lossy);
        sum = sum + c * powu(lambda, s);
    }
    Ok(sum / two.powi(d as i32))
}
