//! Interval-r.e. functions given by stage-indexed lower approximations to
//! their increments, the step function `f_S` of a finite prefix-free
//! machine, and the passage from an oracle to a staged martingale.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::martingale::{cdf_at_dyadic, MartingaleTable, StagedMartingale, TreeTable};
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

/// A finite prefix-free machine: each program word prints a dyadic in
/// `[0, 1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixFreeMachine {
    table: BTreeMap<BinWord, Dyadic>,
}

impl PrefixFreeMachine {
    pub fn new(table: BTreeMap<BinWord, Dyadic>) -> Result<Self> {
        // In sorted order any extension of a key follows it directly.
        let keys: Vec<_> = table.keys().collect();
        if let Some(w) = keys.windows(2).find(|w| w[0].is_prefix_of(w[1])) {
            return Err(Error::Machine(format!("{} is a prefix of {}", w[0], w[1])));
        }
        if let Some((w, out)) = table
            .iter()
            .find(|(_, o)| o.value().is_negative() || !(o.in_unit() && *o != &Dyadic::one()))
        {
            return Err(Error::Machine(format!("output {out} of {w} not in [0, 1)")));
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &BTreeMap<BinWord, Dyadic> {
        &self.table
    }

    /// `f_S(x)`: the measure of the programs printing a value `< x`.
    pub fn fs_eval(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() || *x > rat::int(1) {
            return Err(Error::OutOfRange(rat::fmt(x)));
        }
        Ok(self
            .table
            .iter()
            .filter(|(_, out)| out.value() < x)
            .map(|(w, _)| pow2(-(w.len() as i64)))
            .sum())
    }

    /// Parses `{"word": "p/2^k", …}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| Error::parse("machine file", text, e.to_string()))?;
        let table = raw
            .iter()
            .map(|(w, v)| Ok((BinWord::parse(w)?, Dyadic::parse(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(table)
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<String, String> = self
            .table
            .iter()
            .map(|(w, v)| (w.as_string(), v.to_string()))
            .collect();
        serde_json::to_string_pretty(&raw).unwrap()
    }
}

/// Lower approximations `approx(p, q, s) ↗ f(q) − f(p)` for dyadic `p < q`.
pub trait IntervalReOracle {
    fn approx(&self, p: &Dyadic, q: &Dyadic, stage: usize) -> Result<Rat>;

    /// A declared Lipschitz constant, if any.
    fn lipschitz(&self) -> Option<Rat> {
        None
    }

    /// How many stages carry new information.
    fn stage_hint(&self) -> usize {
        1
    }
}

impl<O: IntervalReOracle + ?Sized> IntervalReOracle for Box<O> {
    fn approx(&self, p: &Dyadic, q: &Dyadic, stage: usize) -> Result<Rat> {
        (**self).approx(p, q, stage)
    }
    fn lipschitz(&self) -> Option<Rat> {
        (**self).lipschitz()
    }
    fn stage_hint(&self) -> usize {
        (**self).stage_hint()
    }
}

/// `f(x) = c·x`, exact from stage 0.
#[derive(Clone, Debug)]
pub struct LinearOracle {
    pub c: Rat,
}

impl IntervalReOracle for LinearOracle {
    fn approx(&self, p: &Dyadic, q: &Dyadic, _stage: usize) -> Result<Rat> {
        Ok(&self.c * (q.value() - p.value()))
    }

    fn lipschitz(&self) -> Option<Rat> {
        Some(self.c.clone())
    }
}

/// `f_S` for a finite machine: a single exact stage.
#[derive(Clone, Debug)]
pub struct MachineOracle(pub PrefixFreeMachine);

impl IntervalReOracle for MachineOracle {
    fn approx(&self, p: &Dyadic, q: &Dyadic, _stage: usize) -> Result<Rat> {
        Ok(self.0.fs_eval(q.value())? - self.0.fs_eval(p.value())?)
    }
}

pub fn oracle_from_machine(machine: PrefixFreeMachine) -> MachineOracle {
    MachineOracle(machine)
}

/// Increments read off the cdfs of explicit stage tables; stages past the
/// last repeat it.
#[derive(Clone, Debug)]
pub struct StagedOracle {
    staged: StagedMartingale,
    lipschitz: Rat,
}

impl StagedOracle {
    pub fn new(staged: StagedMartingale) -> Self {
        let lipschitz = staged.last().min_max().1;
        Self { staged, lipschitz }
    }

    pub fn staged(&self) -> &StagedMartingale {
        &self.staged
    }
}

impl IntervalReOracle for StagedOracle {
    fn approx(&self, p: &Dyadic, q: &Dyadic, stage: usize) -> Result<Rat> {
        let s = stage.min(self.staged.stage_count() - 1);
        let m = self.staged.stage(s);
        Ok(cdf_at_dyadic(m, q)? - cdf_at_dyadic(m, p)?)
    }

    fn lipschitz(&self) -> Option<Rat> {
        Some(self.lipschitz.clone())
    }

    fn stage_hint(&self) -> usize {
        self.staged.stage_count()
    }
}

/// An oracle from a closure, mostly for experiments.
pub struct FnOracle<F> {
    pub f: F,
    pub lipschitz: Option<Rat>,
    pub stages: usize,
}

impl<F: Fn(&Dyadic, &Dyadic, usize) -> Rat> IntervalReOracle for FnOracle<F> {
    fn approx(&self, p: &Dyadic, q: &Dyadic, stage: usize) -> Result<Rat> {
        Ok((self.f)(p, q, stage))
    }

    fn lipschitz(&self) -> Option<Rat> {
        self.lipschitz.clone()
    }

    fn stage_hint(&self) -> usize {
        self.stages
    }
}

/// `M_s(σ) = 2^{|σ|}·approx(0.σ, 0.σ + 2^{-|σ|}, s)` for `|σ| ≤ depth`.
///
/// Stage additivity of the oracle is required, not repaired: the first
/// stage whose table is unfair is reported with its worst residual.
pub fn oracle_to_staged<O: IntervalReOracle + ?Sized>(
    oracle: &O,
    depth: usize,
    stages: usize,
) -> Result<StagedMartingale> {
    if stages == 0 {
        return Err(Error::Parameter("need at least one stage".into()));
    }
    let mut out: Option<StagedMartingale> = None;
    for s in 0..stages {
        let mut err = None;
        let table = TreeTable::from_fn(depth, |w| {
            let p = Dyadic::new(w.left_end()).unwrap();
            let q = Dyadic::new(w.right_end()).unwrap();
            match oracle.approx(&p, &q, s) {
                Ok(v) => v * pow2(w.len() as i64),
                Err(e) => {
                    err.get_or_insert(e);
                    Rat::zero()
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let worst = table
            .fairness_violations()
            .into_iter()
            .max_by(|a, b| a.residual.abs().cmp(&b.residual.abs()));
        if let Some(v) = worst {
            // the table residual is 2^{|σ|+1} times the additivity residual
            let scale = pow2(-(v.word.len() as i64) - 1);
            return Err(Error::NonAdditiveOracle {
                stage: s,
                residual: rat::fmt(&(v.residual * scale)),
                word: v.word,
            });
        }
        if let Some(c) = oracle.lipschitz() {
            if let Some((w, v)) = table.entries().find(|(_, v)| **v > c) {
                return Err(Error::Contract(format!(
                    "stage {s} slope {} at {w} exceeds declared Lipschitz bound {}",
                    rat::fmt(v),
                    rat::fmt(&c)
                )));
            }
        }
        let m = MartingaleTable::new(table)?;
        match out.as_mut() {
            None => out = Some(StagedMartingale::new(vec![m])?),
            Some(sm) => sm.push(m)?,
        }
    }
    Ok(out.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn d(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    fn two_programs() -> PrefixFreeMachine {
        let mut t = BTreeMap::new();
        t.insert(BinWord::parse("0").unwrap(), d("0"));
        t.insert(BinWord::parse("1").unwrap(), d("1/2"));
        PrefixFreeMachine::new(t).unwrap()
    }

    #[test]
    fn fs_examples() {
        let s = two_programs();
        assert_eq!(s.fs_eval(&ratio(1, 4)).unwrap(), ratio(1, 2));
        assert_eq!(s.fs_eval(&int(1)).unwrap(), int(1));
        assert_eq!(s.fs_eval(&int(0)).unwrap(), int(0));
    }

    #[test]
    fn fs_is_left_continuous_at_outputs() {
        let s = two_programs();
        // strict inequality: the program printing 1/2 is not counted at 1/2
        assert_eq!(s.fs_eval(&ratio(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(s.fs_eval(&ratio(513, 1024)).unwrap(), int(1));
    }

    #[test]
    fn rejects_non_prefix_free() {
        let mut t = BTreeMap::new();
        t.insert(BinWord::parse("0").unwrap(), d("0"));
        t.insert(BinWord::parse("01").unwrap(), d("1/2"));
        assert!(matches!(PrefixFreeMachine::new(t), Err(Error::Machine(_))));
        let mut t = BTreeMap::new();
        t.insert(BinWord::parse("1").unwrap(), d("1"));
        assert!(PrefixFreeMachine::new(t).is_err());
    }

    #[test]
    fn machine_json() {
        let s = PrefixFreeMachine::from_json(r#"{"0": "0", "1": "1/2"}"#).unwrap();
        assert_eq!(s, two_programs());
        assert_eq!(PrefixFreeMachine::from_json(&s.to_json()).unwrap(), s);
        assert!(PrefixFreeMachine::from_json(r#"{"0": "1/3"}"#).is_err());
    }

    #[test]
    fn machine_oracle_examples() {
        let empty = oracle_from_machine(PrefixFreeMachine::default());
        assert_eq!(empty.approx(&d("0"), &d("1"), 0).unwrap(), int(0));
        let o = oracle_from_machine(two_programs());
        assert_eq!(o.approx(&d("0"), &d("1/4"), 0).unwrap(), ratio(1, 2));
        assert_eq!(o.approx(&d("1/4"), &d("1/2"), 0).unwrap(), int(0));
    }

    #[test]
    fn linear_oracle_to_staged() {
        for c in [int(1), int(2)] {
            let sm = oracle_to_staged(&LinearOracle { c: c.clone() }, 3, 2).unwrap();
            for stage in sm.stages() {
                assert!(stage.table().entries().all(|(_, v)| *v == c));
            }
        }
    }

    #[test]
    fn explicit_increments_to_staged() {
        let o = FnOracle {
            f: |p: &Dyadic, q: &Dyadic, _s: usize| {
                let f = |x: &Rat| {
                    if *x <= ratio(1, 2) {
                        x / int(2)
                    } else {
                        ratio(1, 4) + (x - ratio(1, 2)) * ratio(3, 2)
                    }
                };
                f(q.value()) - f(p.value())
            },
            lipschitz: None,
            stages: 1,
        };
        let sm = oracle_to_staged(&o, 1, 1).unwrap();
        let m = sm.last();
        assert_eq!(*m.get(&BinWord::empty()).unwrap(), int(1));
        assert_eq!(*m.get(&BinWord::parse("0").unwrap()).unwrap(), ratio(1, 2));
        assert_eq!(*m.get(&BinWord::parse("1").unwrap()).unwrap(), ratio(3, 2));
    }

    #[test]
    fn non_additive_oracle_is_rejected() {
        let o = FnOracle {
            f: |p: &Dyadic, q: &Dyadic, _s: usize| {
                let len = q.value() - p.value();
                &len * &len
            },
            lipschitz: None,
            stages: 1,
        };
        match oracle_to_staged(&o, 2, 1) {
            Err(Error::NonAdditiveOracle {
                stage: 0,
                word,
                residual,
            }) => {
                // (1/2)² + (1/2)² − 1 = −1/2 at the root is the worst
                assert_eq!(word, BinWord::empty());
                assert_eq!(residual, "-1/2");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lipschitz_bound_enforced() {
        let o = oracle_from_machine(two_programs());
        let wrapped = FnOracle {
            f: |p: &Dyadic, q: &Dyadic, s: usize| o.approx(p, q, s).unwrap(),
            lipschitz: Some(int(1)),
            stages: 1,
        };
        assert!(matches!(
            oracle_to_staged(&wrapped, 2, 1),
            Err(Error::Contract(_))
        ));
    }
}
