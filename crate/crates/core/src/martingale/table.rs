use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

use super::Martingale;

/// Rational values on every word of length `≤ depth`, stored level by level
/// in increasing order of `0.τ`. No invariants beyond completeness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTable {
    levels: Vec<Vec<Rat>>,
}

/// A word where `T(σ0) + T(σ1) ≠ 2·T(σ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessViolation {
    pub word: BinWord,
    pub residual: Rat,
}

impl TreeTable {
    pub fn from_levels(levels: Vec<Vec<Rat>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::IncompleteTable(BinWord::empty()));
        }
        for (l, level) in levels.iter().enumerate() {
            if level.len() != 1usize << l {
                let missing = BinWord::from_index(level.len().min((1 << l) - 1) as u64, l);
                return Err(Error::IncompleteTable(missing));
            }
        }
        Ok(Self { levels })
    }

    pub fn from_fn(depth: usize, mut f: impl FnMut(&BinWord) -> Rat) -> Self {
        let levels = (0..=depth)
            .map(|l| BinWord::level(l).map(|w| f(&w)).collect())
            .collect();
        Self { levels }
    }

    /// Builds a table from sparse entries; every word up to the deepest
    /// entry must be present.
    pub fn from_entries(entries: &BTreeMap<BinWord, Rat>) -> Result<Self> {
        let depth = entries.keys().map(BinWord::len).max().unwrap_or(0);
        let mut levels = Vec::with_capacity(depth + 1);
        for l in 0..=depth {
            let level = BinWord::level(l)
                .map(|w| entries.get(&w).cloned().ok_or(Error::IncompleteTable(w)))
                .collect::<Result<Vec<_>>>()?;
            levels.push(level);
        }
        Ok(Self { levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &[Rat] {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Vec<Rat>] {
        &self.levels
    }

    pub fn get(&self, w: &BinWord) -> Result<&Rat> {
        if w.len() > self.depth() {
            return Err(Error::Depth {
                word: w.clone(),
                depth: self.depth(),
            });
        }
        Ok(&self.levels[w.len()][w.index() as usize])
    }

    pub fn at(&self, level: usize, index: usize) -> &Rat {
        &self.levels[level][index]
    }

    pub fn fairness_violations(&self) -> Vec<FairnessViolation> {
        let mut out = Vec::new();
        for l in 0..self.depth() {
            for (i, v) in self.levels[l].iter().enumerate() {
                let kids = &self.levels[l + 1];
                let residual = &kids[2 * i] + &kids[2 * i + 1] - v * rat::int(2);
                if !residual.is_zero() {
                    out.push(FairnessViolation {
                        word: BinWord::from_index(i as u64, l),
                        residual,
                    });
                }
            }
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (BinWord, &Rat)> {
        self.levels.iter().enumerate().flat_map(|(l, level)| {
            level
                .iter()
                .enumerate()
                .map(move |(i, v)| (BinWord::from_index(i as u64, l), v))
        })
    }

    /// `2^{-(b−|σ|)} Σ_{|η|=b−|σ|} |T(ση)|`.
    pub fn level_average_abs(&self, sigma: &BinWord, b: usize) -> Result<Rat> {
        if b < sigma.len() || b > self.depth() {
            return Err(Error::Depth {
                word: sigma.clone(),
                depth: b,
            });
        }
        let span = 1usize << (b - sigma.len());
        let start = sigma.index() as usize * span;
        let sum: Rat = self.levels[b][start..start + span]
            .iter()
            .map(|v| v.abs())
            .sum();
        Ok(sum * pow2(-((b - sigma.len()) as i64)))
    }
}

/// Lists every word where fairness fails, with its residual.
pub fn check_fairness(table: &TreeTable) -> Vec<FairnessViolation> {
    table.fairness_violations()
}

/// A fair, nonnegative table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MartingaleTable(TreeTable);

impl MartingaleTable {
    pub fn new(table: TreeTable) -> Result<Self> {
        if let Some(v) = table.fairness_violations().into_iter().next() {
            return Err(Error::Unfair {
                word: v.word,
                residual: rat::fmt(&v.residual),
            });
        }
        if let Some((w, v)) = table.entries().find(|(_, v)| v.is_negative()) {
            return Err(Error::Negative {
                word: w,
                value: rat::fmt(v),
            });
        }
        Ok(Self(table))
    }

    pub fn from_fn(depth: usize, f: impl FnMut(&BinWord) -> Rat) -> Result<Self> {
        Self::new(TreeTable::from_fn(depth, f))
    }

    pub fn constant(depth: usize, c: Rat) -> Result<Self> {
        Self::from_fn(depth, |_| c.clone())
    }

    pub fn table(&self) -> &TreeTable {
        &self.0
    }

    pub fn into_table(self) -> TreeTable {
        self.0
    }

    pub fn depth(&self) -> usize {
        self.0.depth()
    }

    pub fn get(&self, w: &BinWord) -> Result<&Rat> {
        self.0.get(w)
    }

    /// `μ_M[0.σ, 0.σ + 2^{-|σ|}) = M(σ)·2^{-|σ|}`.
    pub fn measure_of_word(&self, w: &BinWord) -> Result<Rat> {
        Ok(rat::scale_pow2(self.get(w)?, w.len() as u64))
    }

    pub fn check_fairness(&self) -> Vec<FairnessViolation> {
        self.0.fairness_violations()
    }

    pub fn min_max(&self) -> (Rat, Rat) {
        let mut it = self.0.entries().map(|(_, v)| v);
        let first = it.next().unwrap().clone();
        it.fold((first.clone(), first), |(lo, hi), v| {
            (rat::min(&lo, v), rat::max(&hi, v))
        })
    }
}

/// A fair table with values of either sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMartingaleTable(TreeTable);

impl SignedMartingaleTable {
    pub fn new(table: TreeTable) -> Result<Self> {
        if let Some(v) = table.fairness_violations().into_iter().next() {
            return Err(Error::Unfair {
                word: v.word,
                residual: rat::fmt(&v.residual),
            });
        }
        Ok(Self(table))
    }

    pub fn from_fn(depth: usize, f: impl FnMut(&BinWord) -> Rat) -> Result<Self> {
        Self::new(TreeTable::from_fn(depth, f))
    }

    pub fn table(&self) -> &TreeTable {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.depth()
    }

    pub fn get(&self, w: &BinWord) -> Result<&Rat> {
        self.0.get(w)
    }

    pub fn check_fairness(&self) -> Vec<FairnessViolation> {
        self.0.fairness_violations()
    }

    /// `V_{L,b}(σ)`: the level-`b` average of `|L|` below `σ`.
    pub fn level_variation(&self, sigma: &BinWord, b: usize) -> Result<Rat> {
        self.0.level_average_abs(sigma, b)
    }

    /// `V_{L,depth}(σ)`, the best lower bound on `V_L(σ)` the table supports.
    pub fn variation_lower_bound(&self, sigma: &BinWord) -> Result<Rat> {
        self.level_variation(sigma, self.depth())
    }
}

impl Martingale for TreeTable {
    type State = (usize, usize);

    fn root(&self) -> Result<((usize, usize), Rat)> {
        Ok(((0, 0), self.levels[0][0].clone()))
    }

    fn child(&self, &(l, i): &(usize, usize), bit: bool) -> Result<((usize, usize), Rat)> {
        if l + 1 > self.depth() {
            return Err(Error::Depth {
                word: BinWord::from_index(i as u64, l).child(bit),
                depth: self.depth(),
            });
        }
        let j = 2 * i + bit as usize;
        Ok(((l + 1, j), self.levels[l + 1][j].clone()))
    }
}

impl Martingale for MartingaleTable {
    type State = (usize, usize);

    fn root(&self) -> Result<((usize, usize), Rat)> {
        self.0.root()
    }

    fn child(&self, s: &(usize, usize), bit: bool) -> Result<((usize, usize), Rat)> {
        self.0.child(s, bit)
    }
}

impl Martingale for SignedMartingaleTable {
    type State = (usize, usize);

    fn root(&self) -> Result<((usize, usize), Rat)> {
        self.0.root()
    }

    fn child(&self, s: &(usize, usize), bit: bool) -> Result<((usize, usize), Rat)> {
        self.0.child(s, bit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn words(pairs: &[(&str, i64)]) -> BTreeMap<BinWord, Rat> {
        pairs
            .iter()
            .map(|(w, v)| (BinWord::parse(w).unwrap(), int(*v)))
            .collect()
    }

    #[test]
    fn fairness_examples() {
        let ones = MartingaleTable::constant(5, int(1)).unwrap();
        assert!(ones.check_fairness().is_empty());

        let t = TreeTable::from_entries(&words(&[("", 1), ("0", 2), ("1", 0)])).unwrap();
        assert!(check_fairness(&t).is_empty());

        let t = TreeTable::from_entries(&words(&[("", 1), ("0", 1), ("1", 0)])).unwrap();
        assert_eq!(
            check_fairness(&t),
            vec![FairnessViolation {
                word: BinWord::empty(),
                residual: int(-1)
            }]
        );
        assert!(matches!(MartingaleTable::new(t), Err(Error::Unfair { .. })));
    }

    #[test]
    fn incomplete_entries() {
        let e = TreeTable::from_entries(&words(&[("", 1), ("0", 2)]));
        assert_eq!(e, Err(Error::IncompleteTable(BinWord::parse("1").unwrap())));
    }

    #[test]
    fn negative_rejected_for_plain_accepted_for_signed() {
        let t = TreeTable::from_entries(&words(&[("", 0), ("0", 1), ("1", -1)])).unwrap();
        assert!(matches!(
            MartingaleTable::new(t.clone()),
            Err(Error::Negative { .. })
        ));
        assert!(SignedMartingaleTable::new(t).is_ok());
    }

    #[test]
    fn measure_examples() {
        let ones = MartingaleTable::constant(3, int(1)).unwrap();
        assert_eq!(
            ones.measure_of_word(&BinWord::parse("01").unwrap())
                .unwrap(),
            ratio(1, 4)
        );
        let two = MartingaleTable::constant(2, int(2)).unwrap();
        assert_eq!(two.measure_of_word(&BinWord::empty()).unwrap(), int(2));
        let t = TreeTable::from_entries(&words(&[("", 1), ("0", 2), ("1", 0)])).unwrap();
        let m = MartingaleTable::new(t).unwrap();
        assert_eq!(
            m.measure_of_word(&BinWord::parse("0").unwrap()).unwrap(),
            int(1)
        );
        assert!(matches!(
            m.measure_of_word(&BinWord::parse("00").unwrap()),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn level_variation_examples() {
        let t = TreeTable::from_entries(&words(&[("", 0), ("0", 1), ("1", -1)])).unwrap();
        let l = SignedMartingaleTable::new(t).unwrap();
        assert_eq!(l.level_variation(&BinWord::empty(), 1).unwrap(), int(1));
        let zero = SignedMartingaleTable::from_fn(4, |_| int(0)).unwrap();
        assert_eq!(
            zero.level_variation(&BinWord::parse("01").unwrap(), 3)
                .unwrap(),
            int(0)
        );
        assert_eq!(
            zero.variation_lower_bound(&BinWord::empty()).unwrap(),
            int(0)
        );
        let one = SignedMartingaleTable::from_fn(3, |_| int(1)).unwrap();
        assert_eq!(one.level_variation(&BinWord::empty(), 3).unwrap(), int(1));
        assert!(one.level_variation(&BinWord::empty(), 4).is_err());
    }

    #[test]
    fn alternating_subtree_variation() {
        // ±1 by leading bit below level 1.
        let l = SignedMartingaleTable::from_fn(4, |w| {
            if w.is_empty() {
                int(0)
            } else if w.bit(0) {
                int(-1)
            } else {
                int(1)
            }
        })
        .unwrap();
        assert_eq!(
            l.variation_lower_bound(&BinWord::parse("0").unwrap())
                .unwrap(),
            int(1)
        );
    }
}
