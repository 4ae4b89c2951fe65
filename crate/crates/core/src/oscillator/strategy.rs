use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::martingale::Martingale;
use crate::rat::{self, Rat};
use crate::word::BinWord;

/// A betting rule: from the history `σ` and current capital, the capital
/// after each possible next bit. The two must average to the current
/// capital and be nonnegative.
pub trait BettingStrategy {
    fn initial_capital(&self) -> Rat;

    fn bet(&self, history: &BinWord, capital: &Rat) -> (Rat, Rat);
}

/// Never bets.
#[derive(Clone, Debug)]
pub struct Constant(pub Rat);

impl BettingStrategy for Constant {
    fn initial_capital(&self) -> Rat {
        self.0.clone()
    }

    fn bet(&self, _history: &BinWord, capital: &Rat) -> (Rat, Rat) {
        (capital.clone(), capital.clone())
    }
}

/// Stakes everything on the next bit being `bit`.
#[derive(Clone, Debug)]
pub struct DoubleOnBit {
    pub bit: bool,
    pub initial: Rat,
}

impl BettingStrategy for DoubleOnBit {
    fn initial_capital(&self) -> Rat {
        self.initial.clone()
    }

    fn bet(&self, _history: &BinWord, capital: &Rat) -> (Rat, Rat) {
        let all = capital + capital;
        if self.bit {
            (Rat::zero(), all)
        } else {
            (all, Rat::zero())
        }
    }
}

/// Stakes everything on bit `n` equalling `pattern[n mod |pattern|]`.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub pattern: BinWord,
    pub initial: Rat,
}

impl BettingStrategy for Pattern {
    fn initial_capital(&self) -> Rat {
        self.initial.clone()
    }

    fn bet(&self, history: &BinWord, capital: &Rat) -> (Rat, Rat) {
        let next = self.pattern.bit(history.len() % self.pattern.len());
        DoubleOnBit {
            bit: next,
            initial: Rat::zero(),
        }
        .bet(history, capital)
    }
}

/// Parses `constant`, `double0`, `double1` or `pattern:<bits>`, all starting
/// from capital 1.
pub fn strategy_by_name(name: &str) -> Result<Box<dyn BettingStrategy + Send + Sync>> {
    let one = rat::int(1);
    Ok(match name {
        "constant" => Box::new(Constant(one)),
        "double0" => Box::new(DoubleOnBit {
            bit: false,
            initial: one,
        }),
        "double1" => Box::new(DoubleOnBit {
            bit: true,
            initial: one,
        }),
        _ => match name.strip_prefix("pattern:") {
            Some(bits) if !bits.is_empty() => Box::new(Pattern {
                pattern: BinWord::parse(bits)?,
                initial: one,
            }),
            _ => {
                return Err(Error::Parameter(format!(
                "unknown strategy {name:?}; expected constant, double0, double1 or pattern:<bits>"
            )))
            }
        },
    })
}

/// The martingale a strategy's capital traces out.
pub struct StrategyMartingale<S>(pub S);

impl<S: BettingStrategy + ?Sized> BettingStrategy for Box<S> {
    fn initial_capital(&self) -> Rat {
        (**self).initial_capital()
    }

    fn bet(&self, history: &BinWord, capital: &Rat) -> (Rat, Rat) {
        (**self).bet(history, capital)
    }
}

impl<S: BettingStrategy> Martingale for StrategyMartingale<S> {
    type State = (BinWord, Rat);

    fn root(&self) -> Result<(Self::State, Rat)> {
        let c = self.0.initial_capital();
        if c.is_negative() {
            return Err(Error::Negative {
                word: BinWord::empty(),
                value: rat::fmt(&c),
            });
        }
        Ok(((BinWord::empty(), c.clone()), c))
    }

    fn child(&self, (history, capital): &Self::State, bit: bool) -> Result<(Self::State, Rat)> {
        let (c0, c1) = self.0.bet(history, capital);
        if &c0 + &c1 != capital + capital {
            return Err(Error::Unfair {
                word: history.clone(),
                residual: rat::fmt(&(&c0 + &c1 - capital - capital)),
            });
        }
        let v = if bit { c1 } else { c0 };
        let w = history.child(bit);
        if v.is_negative() {
            return Err(Error::Negative {
                word: w,
                value: rat::fmt(&v),
            });
        }
        Ok(((w, v.clone()), v))
    }
}
