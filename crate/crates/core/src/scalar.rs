//! Numeric types used for reference mass.
//!
//! Every counting, projection and metric routine is generic over [`Scalar`].
//! The exact default is [`BigRational`]: even splits produce fractions and
//! conservation checks compare sums bit-exactly. `f64`/`f32` are available
//! for fast approximate runs, and [`Rational64`] for corpora whose branching
//! is small enough that denominators stay inside 64 bits.

use std::fmt::Debug;
use std::iter::Sum;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio, Rational64};
use num_traits::{FromPrimitive, Num, NumAssignOps, Signed, ToPrimitive, Zero};

/// Mass type used throughout the pipeline.
pub trait Scalar:
    Num + NumAssignOps + Clone + PartialOrd + Debug + Send + Sync + Sum + 'static
{
    /// `true` when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_count(n: u64) -> Self;

    /// Converts to an exact rational. Floats convert through their binary
    /// expansion; non-finite values are a bug upstream and panic.
    fn to_ratio(&self) -> BigRational;

    fn from_ratio(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// Sum of many values; exact types may override with something faster
    /// than pairwise addition.
    fn total<I: IntoIterator<Item = Self>>(values: I) -> Self {
        values.into_iter().sum()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_count(n: u64) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }

    fn to_ratio(&self) -> BigRational {
        self.clone()
    }

    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    /// Adds numerators per denominator first; split masses share few
    /// distinct denominators, so this skips most gcd work.
    fn total<I: IntoIterator<Item = Self>>(values: I) -> Self {
        let mut by_den: std::collections::HashMap<BigInt, BigInt> = std::collections::HashMap::new();
        for v in values {
            let (n, d) = v.into_raw();
            *by_den.entry(d).or_insert_with(BigInt::zero) += n;
        }
        by_den.into_iter().map(|(d, n)| Ratio::new(n, d)).sum()
    }
}

impl Scalar for Rational64 {
    const EXACT: bool = true;

    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }

    fn to_ratio(&self) -> BigRational {
        Ratio::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }

    fn from_ratio(r: &BigRational) -> Self {
        let n = r.numer().to_i64().expect("numerator exceeds i64");
        let d = r.denom().to_i64().expect("denominator exceeds i64");
        Ratio::new(n, d)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_count(n: u64) -> Self {
                n as $t
            }

            fn to_ratio(&self) -> BigRational {
                BigRational::from_float(*self).expect("non-finite mass")
            }

            fn from_ratio(r: &BigRational) -> Self {
                <$t as FromPrimitive>::from_f64(ToPrimitive::to_f64(r).unwrap_or(f64::NAN))
                    .unwrap_or(<$t>::NAN)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Numerator and denominator of the reduced exact value, as decimal strings.
pub fn num_den<M: Scalar>(value: &M) -> (String, String) {
    let r = value.to_ratio();
    (r.numer().to_string(), r.denom().to_string())
}

/// Decimal rendering rounded half-to-even at `digits` fractional digits.
///
/// Computed on the exact value, so `1/3` at 6 digits is `0.333333` and
/// `5/2 * 10^-6` lands on the even neighbour.
pub fn to_decimal<M: Scalar>(value: &M, digits: u32) -> String {
    let r = value.to_ratio();
    let negative = r.is_negative();
    let r = r.abs();
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = r.numer() * &scale;
    let (mut q, rem) = scaled.div_rem(r.denom());
    let twice = rem * 2u32;
    match twice.cmp(r.denom()) {
        std::cmp::Ordering::Greater => q += 1u32,
        std::cmp::Ordering::Equal if q.is_odd() => q += 1u32,
        _ => {}
    }
    let mut s = q.to_string();
    if digits > 0 {
        let width = digits as usize + 1;
        if s.len() < width {
            s = format!("{}{}", "0".repeat(width - s.len()), s);
        }
        s.insert(s.len() - digits as usize, '.');
    }
    if negative && !q.is_zero() {
        s.insert(0, '-');
    }
    s
}

/// Parses `"3"`, `"3/4"` or a decimal such as `"0.25"` into an exact value.
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let sign = if int.starts_with('-') { -1 } else { 1 };
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().ok()?;
        let n = int.abs() * &scale + frac;
        return Some(Ratio::new(n * sign, scale));
    }
    let n: BigInt = text.parse().ok()?;
    Some(Ratio::from_integer(n))
}
