//! Probability scalars. Exact accounting runs over big rationals; reports
//! and Monte-Carlo estimates use floats. Code that only multiplies and
//! divides probabilities is written once against [`Probability`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub trait Probability:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// `num / den`; `den` is non-zero.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// `self^exp` by repeated squaring.
    fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            exp >>= 1;
        }
        acc
    }
}

impl Probability for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for f32 {
    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Probability for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Formats an exact rational as `p/q` (always with a denominator).
pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a plain integer.
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| format!("bad rational {s:?}"))?;
    let d: BigInt = d.parse().map_err(|_| format!("bad rational {s:?}"))?;
    if d == BigInt::from(0) {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(n, d))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod ratio_serde {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::ratio_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        super::parse_ratio(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_product<P: Probability>() -> P {
        let half = P::from_ratio(1, 2);
        half.pow(3) * P::from_ratio(2, 1)
    }

    #[test]
    fn same_code_for_both_scalars() {
        assert_eq!(generic_product::<BigRational>(), BigRational::from_ratio(1, 4));
        assert_eq!(generic_product::<f64>(), 0.25);
        assert_eq!(generic_product::<f32>(), 0.25);
    }

    #[test]
    fn ratio_strings() {
        assert_eq!(ratio_string(&BigRational::from_ratio(2, 4)), "1/2");
        assert_eq!(ratio_string(&BigRational::from_ratio(3, 1)), "3/1");
        assert_eq!(parse_ratio("2/4").unwrap(), BigRational::from_ratio(1, 2));
        assert_eq!(parse_ratio("7").unwrap(), BigRational::from_ratio(7, 1));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }
}
