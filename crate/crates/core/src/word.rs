use std::fmt;

use num_bigint::BigInt;
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rat::{self, Rat};

/// A finite binary word; `0.σ` names the dyadic rational with these digits.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinWord {
    bits: Vec<bool>,
}

impl BinWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string over `{0,1}`. `""` is the empty word.
    pub fn parse(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::parse("binary word", s, format!("unexpected {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// `bit` repeated `n` times.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Self::from_bits(vec![bit; n])
    }

    /// The word of length `len` whose binary value is `index` (first bit most
    /// significant).
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "word too long for an integer index");
        let bits = (0..len)
            .map(|i| (index >> (len - 1 - i)) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn child(&self, b: bool) -> Self {
        let mut bits = Vec::with_capacity(self.bits.len() + 1);
        bits.extend_from_slice(&self.bits);
        bits.push(b);
        Self { bits }
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    pub fn concat(&self, other: &BinWord) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn prefix(&self, n: usize) -> Self {
        Self {
            bits: self.bits[..n.min(self.len())].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &BinWord) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// Binary value of the word, for words of length ≤ 64.
    pub fn index(&self) -> u64 {
        assert!(self.len() <= 64, "word too long for an integer index");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn index_big(&self) -> BigInt {
        if self.len() <= 64 {
            return BigInt::from(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64));
        }
        self.bits.iter().fold(BigInt::from(0), |acc, &b| {
            (acc << 1) + BigInt::from(b as u8)
        })
    }

    /// The dyadic rational `0.σ`.
    pub fn left_end(&self) -> Rat {
        rat::over_pow2(self.index_big(), self.len() as u64)
    }

    /// `0.σ + 2^{-|σ|}`.
    pub fn right_end(&self) -> Rat {
        rat::over_pow2(self.index_big() + 1, self.len() as u64)
    }

    /// All words of length `len`, in increasing order of `0.τ`.
    pub fn level(len: usize) -> impl Iterator<Item = BinWord> {
        assert!(len < 64, "level too deep to enumerate");
        (0..1u64 << len).map(move |i| BinWord::from_index(i, len))
    }

    pub fn as_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for BinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("∅")
        } else {
            f.write_str(&self.as_string())
        }
    }
}

impl fmt::Debug for BinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinWord({self})")
    }
}

impl Serialize for BinWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_string())
    }
}

impl<'de> Deserialize<'de> for BinWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BinWord::parse(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    #[test]
    fn index_round_trip() {
        let w = BinWord::parse("0110").unwrap();
        assert_eq!(w.index(), 6);
        assert_eq!(BinWord::from_index(6, 4), w);
        assert_eq!(BinWord::from_index(0, 0), BinWord::empty());
    }

    #[test]
    fn dyadic_ends() {
        let w = BinWord::parse("011").unwrap();
        assert_eq!(w.left_end(), ratio(3, 8));
        assert_eq!(w.right_end(), ratio(1, 2));
        assert_eq!(BinWord::empty().right_end(), ratio(1, 1));
    }

    #[test]
    fn level_is_ordered() {
        let words: Vec<_> = BinWord::level(2).map(|w| w.as_string()).collect();
        assert_eq!(words, ["00", "01", "10", "11"]);
    }

    #[test]
    fn rejects_non_binary() {
        assert!(BinWord::parse("012").is_err());
    }
}
