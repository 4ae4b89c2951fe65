use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::martingale::{tabulate, Martingale, MartingaleTable, TreeTable};
use crate::rat::{self, Rat};
use crate::word::BinWord;

/// Splits the capital of `M` into a banked part and an active part that bets
/// in proportion to `M`. Whenever the active part reaches 2, all but 1 of it
/// is banked. The value is half the total, so no extension drops by more
/// than 1.
#[derive(Clone, Debug)]
pub struct Savings<M>(pub M);

/// Walk state: the inner state and value, then banked and active capital.
#[derive(Clone, Debug)]
pub struct SavingsState<S> {
    inner: S,
    m: Rat,
    save: Rat,
    active: Rat,
}

fn bank(save: &mut Rat, active: &mut Rat) {
    let two = rat::int(2);
    if *active >= two {
        *save += &*active - rat::int(1);
        *active = rat::int(1);
    }
}

impl<M: Martingale> Savings<M> {
    fn make(
        inner: M::State,
        m: Rat,
        mut save: Rat,
        mut active: Rat,
    ) -> (SavingsState<M::State>, Rat) {
        bank(&mut save, &mut active);
        let v = (&save + &active) / rat::int(2);
        (
            SavingsState {
                inner,
                m,
                save,
                active,
            },
            v,
        )
    }
}

impl<M: Martingale> Martingale for Savings<M> {
    type State = SavingsState<M::State>;

    fn root(&self) -> Result<(Self::State, Rat)> {
        let (s, v) = self.0.root()?;
        if v.is_negative() {
            return Err(Error::Negative {
                word: BinWord::empty(),
                value: rat::fmt(&v),
            });
        }
        Ok(Self::make(s, v.clone(), Rat::zero(), v))
    }

    fn child(&self, parent: &Self::State, bit: bool) -> Result<(Self::State, Rat)> {
        let (s, v) = self.0.child(&parent.inner, bit)?;
        let active = if parent.m.is_zero() {
            Rat::zero()
        } else {
            &parent.active * &v / &parent.m
        };
        Ok(Self::make(s, v, parent.save.clone(), active))
    }
}

/// The savings transform of a finite table, to the table's depth.
pub fn savings_transform(m: &MartingaleTable) -> Result<MartingaleTable> {
    MartingaleTable::new(tabulate(&Savings(m), m.depth())?)
}

/// Exhaustive check of `M(στ) ≥ M(σ) − 1` over every word and extension in
/// the table. Returns the largest drop `M(σ) − min_τ M(στ)` and a word
/// attaining it.
pub fn max_drop(table: &TreeTable) -> (Rat, BinWord) {
    let depth = table.depth();
    // subtree minima, bottom up
    let mut below: Vec<Rat> = table.level(depth).to_vec();
    let mut worst = (Rat::zero(), BinWord::empty());
    for l in (0..=depth).rev() {
        let level = table.level(l);
        if l < depth {
            below = level
                .iter()
                .enumerate()
                .map(|(i, v)| rat::min(v, &rat::min(&below[2 * i], &below[2 * i + 1])))
                .collect();
        }
        for (i, (v, lo)) in level.iter().zip(&below).enumerate() {
            let drop = v - lo;
            if drop > worst.0 {
                worst = (drop, BinWord::from_index(i as u64, l));
            }
        }
    }
    worst
}

pub fn has_savings_property(table: &TreeTable) -> bool {
    max_drop(table).0 <= rat::int(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::strategy::{strategy_by_name, StrategyMartingale};
    use crate::rat::{int, ratio};

    #[test]
    fn constant_stays_constant() {
        let m = MartingaleTable::constant(5, int(1)).unwrap();
        let s = savings_transform(&m).unwrap();
        assert!(s.table().entries().all(|(_, v)| *v == ratio(1, 2)));
        assert_eq!(max_drop(s.table()).0, int(0));
    }

    #[test]
    fn doubling_banks_each_step() {
        let m = Savings(StrategyMartingale(strategy_by_name("double0").unwrap()));
        for n in 0..10usize {
            let v = m.value(&BinWord::repeat(false, n)).unwrap();
            assert_eq!(v, ratio(n as i64 + 1, 2));
        }
    }

    #[test]
    fn drop_is_bounded() {
        let m = MartingaleTable::new(
            tabulate(
                &StrategyMartingale(strategy_by_name("pattern:011").unwrap()),
                8,
            )
            .unwrap(),
        )
        .unwrap();
        assert!(!has_savings_property(m.table()));
        let s = savings_transform(&m).unwrap();
        assert!(s.check_fairness().is_empty());
        assert!(has_savings_property(s.table()));
    }
}
