//! Dual-mode arithmetic: every algorithm in this crate is generic over a
//! [`Scalar`] that is either `f64` (fast, tolerance-based) or [`Rational`]
//! (arbitrary precision, exact). Tolerances are part of the scalar: the
//! rational instantiation returns zero for every tolerance, which turns all
//! approximate comparisons into exact ones without touching call sites.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

/// Arbitrary-precision rational scalar.
pub type Rational = BigRational;

/// Number type shared by all solvers and checks.
///
/// `Signed` supplies ring/field operations plus `abs`; the extra methods
/// cover construction, external formatting, and the mode-dependent
/// tolerances. Implementations must be totally ordered on the values the
/// crate produces (inputs are validated to be finite).
pub trait Scalar:
    Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + 'static
{
    /// True when arithmetic is exact and all tolerances are zero.
    const EXACT: bool;

    /// Convert a machine integer.
    fn from_i64(v: i64) -> Self;

    /// Exact ratio of machine integers. Panics if `d == 0`.
    fn from_ratio(n: i64, d: i64) -> Self;

    /// Exact conversion from a finite double (every finite `f64` is a
    /// dyadic rational). Returns `None` for NaN or infinities.
    fn from_f64(v: f64) -> Option<Self>;

    /// Nearest-double view of the value, for plotting and diagnostics.
    fn to_f64(&self) -> f64;

    /// Default comparison tolerance: `1e-9` for doubles, `0` exact.
    fn default_tol() -> Self;

    /// Distance under which two measure atoms are merged: `1e-12` / `0`.
    fn atom_merge_tol() -> Self;

    /// Total order. Inputs are validated finite, so this never sees NaN
    /// in practice; for doubles it falls back to IEEE total ordering.
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Render for external files: decimal for doubles, `num/den` for
    /// rationals (plain integer when the denominator is one).
    fn fmt_external(&self) -> String;

    /// Parse the external form: `num/den`, integer, or decimal string.
    /// Decimal strings parse exactly in rational mode (`0.25` -> `1/4`).
    fn parse_external(s: &str) -> Option<Self>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        n as f64 / d as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn default_tol() -> Self {
        1e-9
    }

    fn atom_merge_tol() -> Self {
        1e-12
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn fmt_external(&self) -> String {
        // Shortest representation that round-trips.
        let mut s = alloc::format!("{self}");
        if s == "-0" {
            s = "0".to_string();
        }
        s
    }

    fn parse_external(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            return <f64 as Scalar>::from_f64(n / d);
        }
        s.parse::<f64>().ok().and_then(<f64 as Scalar>::from_f64)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn from_f64(v: f64) -> Option<Self> {
        <Rational as FromPrimitive>::from_f64(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn default_tol() -> Self {
        num_traits::Zero::zero()
    }

    fn atom_merge_tol() -> Self {
        num_traits::Zero::zero()
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        Ord::cmp(self, other)
    }

    fn fmt_external(&self) -> String {
        self.to_string()
    }

    fn parse_external(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if num_traits::Zero::is_zero(&d) {
                return None;
            }
            return Some(Rational::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            // Exact decimal: int.frac = (int * 10^k + frac) / 10^k.
            let neg = int.trim_start().starts_with('-');
            let int: BigInt = if int.is_empty() || int == "-" {
                num_traits::Zero::zero()
            } else {
                int.parse().ok()?
            };
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let scale = num_traits::pow::pow(BigInt::from(10), frac.len());
            let frac: BigInt = frac.parse().ok()?;
            let signed_frac = if neg { -frac } else { frac };
            return Some(Rational::new(int * &scale + signed_frac, scale));
        }
        let n: BigInt = s.parse().ok()?;
        Some(Rational::from_integer(n))
    }
}

/// `n / d` as a scalar, ergonomic shorthand used throughout tests.
pub fn ratio<S: Scalar>(n: i64, d: i64) -> S {
    S::from_ratio(n, d)
}

/// `v` as a scalar.
pub fn int<S: Scalar>(v: i64) -> S {
    S::from_i64(v)
}

/// `a <= b + tol`.
pub fn le_tol<S: Scalar>(a: &S, b: &S, tol: &S) -> bool {
    a.clone() - b.clone() <= *tol
}

/// `|a - b| <= tol`.
pub fn eq_tol<S: Scalar>(a: &S, b: &S, tol: &S) -> bool {
    (a.clone() - b.clone()).abs() <= *tol
}

/// Maximum under total order.
pub fn max_s<S: Scalar>(a: S, b: S) -> S {
    if a.total_cmp(&b) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Minimum under total order.
pub fn min_s<S: Scalar>(a: S, b: S) -> S {
    if a.total_cmp(&b) == Ordering::Greater {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_external_roundtrip() {
        let r: Rational = ratio(41, 28);
        assert_eq!(r.fmt_external(), "41/28");
        assert_eq!(Rational::parse_external("41/28"), Some(r));
        assert_eq!(
            Rational::parse_external("0.25"),
            Some(ratio::<Rational>(1, 4))
        );
        assert_eq!(
            Rational::parse_external("-1.5"),
            Some(ratio::<Rational>(-3, 2))
        );
        assert_eq!(Rational::parse_external("7"), Some(int::<Rational>(7)));
        assert_eq!(Rational::parse_external("1/0"), None);
        assert_eq!(int::<Rational>(3).fmt_external(), "3");
    }

    #[test]
    fn f64_external_roundtrip() {
        assert_eq!(f64::parse_external("0.25"), Some(0.25));
        assert_eq!(f64::parse_external("1/4"), Some(0.25));
        assert_eq!(f64::parse_external("nan"), None);
        assert_eq!(0.25f64.fmt_external(), "0.25");
    }

    #[test]
    fn exact_f64_to_rational() {
        let r = <Rational as Scalar>::from_f64(0.375).unwrap();
        assert_eq!(r, ratio::<Rational>(3, 8));
        assert!(<Rational as Scalar>::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn tolerances_by_mode() {
        assert!(f64::default_tol() > 0.0);
        assert!(num_traits::Zero::is_zero(&Rational::default_tol()));
        assert!(!f64::EXACT);
        assert!(Rational::EXACT);
    }
}
