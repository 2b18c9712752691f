//! Exact rational constants with a cached floating-point view.
//!
//! Every numeric constant in a recurrence (coefficients, shrink ratios,
//! exponents, base value) is a [`Real`]: an arbitrary-precision rational
//! together with the nearest `f64`. The rational side keeps parsing,
//! canonical printing, threshold arithmetic and the exact evaluation mode
//! free of rounding; the `f64` side feeds the numeric paths (root finding,
//! table evaluation).
//!
//! Invariants:
//! - `approx` is always the correctly rounded `f64` of `exact`
//! - equality and ordering are defined on `exact` only

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact rational number carrying its nearest `f64`.
#[derive(Clone, Debug)]
pub struct Real {
    exact: BigRational,
    approx: f64,
}

impl Real {
    pub fn from_rational(exact: BigRational) -> Self {
        let approx = rational_to_f64(&exact);
        Real { exact, approx }
    }

    pub fn from_int(n: i64) -> Self {
        Real::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact ratio `num/den`. Returns `None` when `den == 0`.
    pub fn from_ratio(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        Some(Real::from_rational(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    /// The exact value of a finite `f64` (every finite double is a dyadic
    /// rational). Returns `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(|exact| Real {
            exact,
            approx: x,
        })
    }

    /// Parses a plain decimal literal such as `3`, `0.25` or `839.2935`
    /// into the exact rational it denotes. Returns `None` for anything
    /// else (signs, exponents, missing digits).
    pub fn from_decimal_str(text: &str) -> Option<Self> {
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) {
            return None;
        }
        if text.contains('.') && (int_part.is_empty() || frac_part.is_empty()) {
            return None;
        }
        let digits: String = [int_part, frac_part].concat();
        let numer: BigInt = digits.parse().ok()?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Some(Real::from_rational(BigRational::new(numer, denom)))
    }

    pub fn zero() -> Self {
        Real::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Real::from_rational(BigRational::one())
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.exact.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.exact.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.exact.is_integer()
    }

    /// Integer value if the number is an integer fitting in `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        if !self.exact.is_integer() {
            return None;
        }
        self.exact.to_integer().to_u64()
    }

    /// Integer value if the number is an integer fitting in `u32`.
    pub fn to_u32(&self) -> Option<u32> {
        if !self.exact.is_integer() {
            return None;
        }
        self.exact.to_integer().to_u32()
    }

    /// Smallest integer `>= self`, as an exact integer.
    pub fn ceil_to_bigint(&self) -> BigInt {
        self.exact.ceil().to_integer()
    }

    pub fn recip(&self) -> Self {
        Real::from_rational(self.exact.recip())
    }

    /// Numerator and denominator of the reduced fraction when both fit in
    /// `u64` (requires the value to be nonnegative).
    pub fn as_u64_ratio(&self) -> Option<(u64, u64)> {
        let p = self.exact.numer().to_u64()?;
        let q = self.exact.denom().to_u64()?;
        Some((p, q))
    }

    /// Canonical text form: an integer, a terminating decimal when the
    /// reduced denominator is of the form 2^a·5^b, otherwise `p/q`.
    /// `Real::from_decimal_str` / fraction parsing invert this exactly.
    pub fn to_canonical_string(&self) -> String {
        let numer = self.exact.numer();
        let denom = self.exact.denom();
        if denom.is_one() {
            return numer.to_string();
        }
        let (two, five) = (BigInt::from(2u32), BigInt::from(5u32));
        let mut rest = denom.clone();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while (&rest % &two).is_zero() {
            rest /= &two;
            twos += 1;
        }
        while (&rest % &five).is_zero() {
            rest /= &five;
            fives += 1;
        }
        if !rest.is_one() {
            return format!("{}/{}", numer, denom);
        }
        // Scale to denominator 10^m; the reduced form guarantees no
        // trailing zero appears in the fractional digits.
        let m = twos.max(fives);
        let scaled: BigInt =
            numer.abs() * two.pow(m - twos) * five.pow(m - fives);
        let digits = scaled.to_string();
        let m = m as usize;
        let (int_digits, frac_digits) = if digits.len() > m {
            let split = digits.len() - m;
            (digits[..split].to_string(), digits[split..].to_string())
        } else {
            ("0".to_string(), format!("{:0>width$}", digits, width = m))
        };
        let sign = if self.exact.is_negative() { "-" } else { "" };
        format!("{}{}.{}", sign, int_digits, frac_digits)
    }
}

/// Correctly rounded `f64` of a big rational (delegates to num-rational,
/// mapping out-of-range magnitudes to signed infinity).
fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exact.cmp(&other.exact)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

macro_rules! impl_real_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real::from_rational((&self.exact).$method(&rhs.exact))
            }
        }
    };
}

impl_real_binop!(Add, add);
impl_real_binop!(Sub, sub);
impl_real_binop!(Mul, mul);
impl_real_binop!(Div, div);
