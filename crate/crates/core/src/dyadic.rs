use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

/// A rational whose reduced denominator is a power of two.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dyadic(Rat);

impl Dyadic {
    pub fn new(value: Rat) -> Result<Self> {
        let d = value.denom();
        if (d & (d - BigInt::one())).is_zero() {
            Ok(Self(value))
        } else {
            Err(Error::Parameter(format!(
                "{} is not dyadic",
                rat::fmt(&value)
            )))
        }
    }

    /// `i · 2^{-k}`.
    pub fn from_parts(i: impl Into<BigInt>, k: u32) -> Self {
        Self(rat::over_pow2(i.into(), k as u64))
    }

    pub fn zero() -> Self {
        Self(Rat::zero())
    }

    pub fn one() -> Self {
        Self(Rat::one())
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(rat::parse(s)?)
    }

    pub fn value(&self) -> &Rat {
        &self.0
    }

    pub fn into_rat(self) -> Rat {
        self.0
    }

    /// The least `k` with `2^k · x` an integer.
    pub fn level(&self) -> u32 {
        self.0.denom().bits() as u32 - 1
    }

    /// Numerator over `2^k`; requires `k ≥ level()`.
    pub fn numerator_at(&self, k: u32) -> BigInt {
        debug_assert!(k >= self.level());
        (self.0.clone() * pow2(k as i64)).to_integer()
    }

    pub fn in_unit(&self) -> bool {
        !self.0.is_negative() && self.0 <= Rat::one()
    }

    /// The length-`len` word `σ` with `0.σ = x`, for `0 ≤ x < 1`.
    pub fn to_word(&self, len: usize) -> Result<BinWord> {
        if !self.in_unit() || self.0 == Rat::one() {
            return Err(Error::OutOfRange(self.to_string()));
        }
        if (self.level() as usize) > len {
            return Err(Error::Resolution {
                level: self.level(),
                depth: len,
            });
        }
        let i = self.numerator_at(len as u32);
        let bits = (0..len).map(|j| i.bit((len - 1 - j) as u64)).collect();
        Ok(BinWord::from_bits(bits))
    }

    /// All `i · 2^{-depth}` in `[x, y]`, together with `x` and `y`, ascending.
    pub fn grid(x: &Dyadic, y: &Dyadic, depth: u32) -> Vec<Dyadic> {
        let scale = pow2(depth as i64);
        let lo = (x.0.clone() * &scale).ceil().to_integer();
        let hi = (y.0.clone() * &scale).floor().to_integer();
        let mut out = vec![x.clone()];
        let mut i = lo;
        while i <= hi {
            let p = Dyadic::from_parts(i.clone(), depth);
            if p > *x && p < *y {
                out.push(p);
            }
            i += 1;
        }
        if y != x {
            out.push(y.clone());
        }
        out
    }
}

impl From<Dyadic> for Rat {
    fn from(d: Dyadic) -> Rat {
        d.0
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&rat::fmt(&self.0))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat::fmt(&self.0))
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Dyadic::parse(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    #[test]
    fn rejects_non_dyadic() {
        assert!(Dyadic::new(ratio(1, 3)).is_err());
        assert!(Dyadic::new(ratio(3, 8)).is_ok());
        assert!(Dyadic::new(ratio(5, 1)).is_ok());
    }

    #[test]
    fn levels() {
        assert_eq!(Dyadic::zero().level(), 0);
        assert_eq!(Dyadic::from_parts(3, 3).level(), 3);
        assert_eq!(Dyadic::from_parts(2, 3).level(), 2);
    }

    #[test]
    fn words() {
        let x = Dyadic::from_parts(3, 3);
        assert_eq!(x.to_word(3).unwrap().as_string(), "011");
        assert_eq!(x.to_word(5).unwrap().as_string(), "01100");
        assert!(x.to_word(2).is_err());
        assert!(Dyadic::one().to_word(4).is_err());
    }

    #[test]
    fn grid_includes_ends() {
        let g = Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), 2);
        assert_eq!(g.len(), 5);
        let g = Dyadic::grid(&Dyadic::from_parts(1, 3), &Dyadic::from_parts(5, 3), 2);
        let v: Vec<_> = g.iter().map(|d| d.to_string()).collect();
        assert_eq!(v, ["1/8", "1/4", "1/2", "5/8"]);
    }
}
