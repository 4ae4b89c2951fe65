//! Exact rationals and the `"numerator/denominator"` text form used by every
//! file format in the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `2^k` for any integer `k`.
pub fn pow2(k: i64) -> Rat {
    let p = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        Rat::from_integer(p)
    } else {
        Rat::new_raw(BigInt::one(), p)
    }
}

/// `x · 2^{-k}` in lowest terms, without a gcd.
pub fn scale_pow2(x: &Rat, k: u64) -> Rat {
    let shift = x.numer().trailing_zeros().map_or(k, |z| z.min(k));
    Rat::new_raw(x.numer() >> shift, x.denom() << (k - shift))
}

/// `i / 2^k` in lowest terms, without a gcd.
pub fn over_pow2(i: BigInt, k: u64) -> Rat {
    let shift = i.trailing_zeros().map_or(k, |z| z.min(k));
    Rat::new_raw(i >> shift, BigInt::one() << (k - shift))
}

pub fn pow(x: &Rat, e: u32) -> Rat {
    num_traits::pow(x.clone(), e as usize)
}

/// Interprets `p` as a nonnegative integer exponent.
pub fn integer_exponent(p: &Rat) -> Result<u32> {
    if !p.is_integer() || p.is_negative() {
        return Err(Error::Parameter(format!(
            "exponent {} is not a nonnegative integer; exact powers need integer p",
            fmt(p)
        )));
    }
    p.to_integer()
        .to_u32()
        .ok_or_else(|| Error::Parameter(format!("exponent {} too large", fmt(p))))
}

/// Exact `e`-th root when `x ≥ 0` is the `e`-th power of a rational.
pub fn exact_root(x: &Rat, e: u32) -> Option<Rat> {
    if x.is_negative() || e == 0 {
        return None;
    }
    let n = x.numer().nth_root(e);
    let d = x.denom().nth_root(e);
    let r = Rat::new(n, d);
    (pow(&r, e) == *x).then_some(r)
}

/// Canonical text form; integers still carry `/1`.
pub fn fmt(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, `"p"`, or a terminating decimal such as `"0.25"`.
pub fn parse(s: &str) -> Result<Rat> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::parse("rational", s, "empty string"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|e| Error::parse("rational", s, format!("numerator: {e}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|e| Error::parse("rational", s, format!("denominator: {e}")))?;
        if d.is_zero() {
            return Err(Error::parse("rational", s, "zero denominator"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let whole: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|e| Error::parse("rational", s, format!("{e}")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse("rational", s, "bad fractional digits"));
        }
        let f: BigInt = frac
            .parse()
            .map_err(|e| Error::parse("rational", s, format!("{e}")))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = Rat::new(f, scale);
        let w = Rat::from_integer(whole.abs());
        let v = w + frac;
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t
        .parse()
        .map_err(|e| Error::parse("rational", s, format!("{e}")))?;
    Ok(Rat::from_integer(n))
}

/// Comma-separated list of rationals.
pub fn parse_list(s: &str) -> Result<Vec<Rat>> {
    s.split(',').map(parse).collect()
}

pub fn min(a: &Rat, b: &Rat) -> Rat {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rat, b: &Rat) -> Rat {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Serde adapter: a single rational as a string.
pub mod serde_str {
    use super::Rat;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter: a list of rationals as strings.
pub mod serde_vec {
    use super::Rat;
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::fmt(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| super::parse(s).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/8").unwrap(), ratio(3, 8));
        assert_eq!(parse("6/16").unwrap(), ratio(3, 8));
        assert_eq!(parse("-2").unwrap(), int(-2));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse(" 1 / 3 ").unwrap(), ratio(1, 3));
    }

    #[test]
    fn parse_rejects_zero_denominator() {
        assert!(matches!(parse("1/0"), Err(Error::Parse { .. })));
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn canonical_format() {
        assert_eq!(fmt(&int(1)), "1/1");
        assert_eq!(fmt(&ratio(-2, 4)), "-1/2");
        assert_eq!(fmt(&ratio(0, 5)), "0/1");
    }

    #[test]
    fn powers_and_roots() {
        assert_eq!(pow2(-3), ratio(1, 8));
        assert_eq!(pow2(4), int(16));
        assert_eq!(exact_root(&ratio(9, 4), 2), Some(ratio(3, 2)));
        assert_eq!(exact_root(&ratio(2, 1), 2), None);
        assert!(integer_exponent(&ratio(3, 2)).is_err());
    }
}
