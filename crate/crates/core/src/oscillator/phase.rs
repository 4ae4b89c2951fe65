use serde::Serialize;

use crate::error::{Error, Result};
use crate::martingale::{tabulate_with_states, CdfFn, Martingale, MartingaleTable};
use crate::piecewise::{dyadic_deriv_bounds, DerivBounds};
use crate::rat::{self, Rat};
use crate::word::BinWord;

use super::savings::max_drop;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Adding what `M` risks until the value reaches 3.
    Up,
    /// Subtracting what `M` risks until the value falls to 2.
    Down,
}

/// The bounded martingale `B` driven by `M`: starts at 2 in the up phase,
/// follows the gains of `M` up to 3, then its losses down to 2, and so on.
/// `M` must have the savings property for `B` to stay in `[1, 4]`.
#[derive(Clone, Debug)]
pub struct Oscillator<M>(M);

impl<M: Martingale> Oscillator<M> {
    /// Trusts the caller that `m` has the savings property, as a
    /// [`Savings`](super::Savings) wrapper always does.
    pub fn new_unchecked(m: M) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &M {
        &self.0
    }
}

impl<M: Martingale> Oscillator<super::Savings<M>> {
    pub fn from_savings(m: super::Savings<M>) -> Self {
        Self(m)
    }
}

#[derive(Clone, Debug)]
pub struct OscState<S> {
    inner: S,
    m: Rat,
    b: Rat,
    phase: Phase,
}

impl<S> OscState<S> {
    pub fn phase(&self) -> Phase {
        self.phase
    }
}

impl<M: Martingale> Martingale for Oscillator<M> {
    type State = OscState<M::State>;

    fn root(&self) -> Result<(Self::State, Rat)> {
        let (inner, m) = self.0.root()?;
        let b = rat::int(2);
        Ok((
            OscState {
                inner,
                m,
                b: b.clone(),
                phase: Phase::Up,
            },
            b,
        ))
    }

    fn child(&self, p: &Self::State, bit: bool) -> Result<(Self::State, Rat)> {
        let (s0, m0) = self.0.child(&p.inner, false)?;
        let (s1, m1) = self.0.child(&p.inner, true)?;
        let (inner, m_child) = if bit {
            (s1, m1.clone())
        } else {
            (s0, m0.clone())
        };
        let (threshold, sign) = match p.phase {
            Phase::Up => (rat::int(3), rat::int(1)),
            Phase::Down => (rat::int(2), rat::int(-1)),
        };
        let r = |mk: &Rat| &p.b + &sign * (mk - &p.m);
        let (r0, r1) = (r(&m0), r(&m1));
        let crossed = |x: &Rat| match p.phase {
            Phase::Up => *x >= threshold,
            Phase::Down => *x <= threshold,
        };
        let (b, phase) = match (crossed(&r0), crossed(&r1)) {
            (false, false) => (if bit { r1 } else { r0 }, p.phase),
            (c0, c1) => {
                if c0 && c1 {
                    return Err(Error::Contract(format!(
                        "both children cross the threshold from {}",
                        rat::fmt(&p.b)
                    )));
                }
                let k = c1;
                let flipped = match p.phase {
                    Phase::Up => Phase::Down,
                    Phase::Down => Phase::Up,
                };
                if bit == k {
                    (threshold, flipped)
                } else {
                    (&p.b + &p.b - threshold, p.phase)
                }
            }
        };
        Ok((
            OscState {
                inner,
                m: m_child,
                b: b.clone(),
                phase,
            },
            b,
        ))
    }
}

/// `B` to a fixed depth, with the phase at every word.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    pub b: MartingaleTable,
    phases: Vec<Vec<Phase>>,
}

impl PhaseTable {
    pub fn depth(&self) -> usize {
        self.b.depth()
    }

    pub fn phase(&self, w: &BinWord) -> Result<Phase> {
        if w.len() > self.depth() {
            return Err(Error::Depth {
                word: w.clone(),
                depth: self.depth(),
            });
        }
        Ok(self.phases[w.len()][w.index() as usize])
    }

    /// Words breaking `up ⇒ B < 3`, `down ⇒ B > 2` or `1 ≤ B ≤ 4`.
    pub fn invariant_violations(&self) -> Vec<BinWord> {
        let (one, two, three, four) = (rat::int(1), rat::int(2), rat::int(3), rat::int(4));
        self.b
            .table()
            .entries()
            .filter(|(w, v)| {
                let ph = self.phases[w.len()][w.index() as usize];
                let phase_ok = match ph {
                    Phase::Up => **v < three,
                    Phase::Down => **v > two,
                };
                !(phase_ok && one <= **v && **v <= four)
            })
            .map(|(w, _)| w)
            .collect()
    }

    pub fn range(&self) -> (Rat, Rat) {
        self.b.min_max()
    }
}

/// Phase switches along the prefixes of `z`.
pub fn count_crossings(table: &PhaseTable, z: &BinWord) -> Result<usize> {
    let phases = (0..=z.len())
        .map(|n| table.phase(&z.prefix(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(phases.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Tabulates `B` from a table `M`, after checking exhaustively that `M`
/// has the savings property.
pub fn build_oscillator(m: &MartingaleTable, depth: usize) -> Result<PhaseTable> {
    if depth > m.depth() {
        return Err(Error::Parameter(format!(
            "depth {depth} exceeds the table depth {}",
            m.depth()
        )));
    }
    let (drop, at) = max_drop(m.table());
    if drop > rat::int(1) {
        return Err(Error::Precondition(format!(
            "no savings property: drop {} below {at}",
            rat::fmt(&drop)
        )));
    }
    let osc = Oscillator::new_unchecked(m);
    let (table, states) = tabulate_with_states(&osc, depth)?;
    let phases = states
        .into_iter()
        .map(|level| level.into_iter().map(|s| s.phase).collect())
        .collect();
    Ok(PhaseTable {
        b: MartingaleTable::new(table)?,
        phases,
    })
}

/// `B`, `M` and the phase at every prefix of a target sequence, computed by
/// walking the path only.
#[derive(Clone, Debug, Serialize)]
pub struct PathTrace {
    #[serde(with = "rat::serde_vec")]
    pub b: Vec<Rat>,
    #[serde(with = "rat::serde_vec")]
    pub m: Vec<Rat>,
    pub phases: Vec<Phase>,
}

impl PathTrace {
    pub fn crossings(&self) -> usize {
        self.phases.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn range(&self) -> (Rat, Rat) {
        let lo = self.b.iter().min().cloned().unwrap();
        let hi = self.b.iter().max().cloned().unwrap();
        (lo, hi)
    }
}

pub fn trace_path<M: Martingale>(osc: &Oscillator<M>, z: &BinWord) -> Result<PathTrace> {
    let (mut state, b0) = osc.root()?;
    let mut out = PathTrace {
        b: vec![b0],
        m: vec![state.m.clone()],
        phases: vec![state.phase],
    };
    for &bit in z.bits() {
        let (s, b) = osc.child(&state, bit)?;
        state = s;
        out.b.push(b);
        out.m.push(state.m.clone());
        out.phases.push(state.phase);
    }
    Ok(out)
}

/// Slope extremes of `cdf(B)` over the basic intervals around `z` at depths
/// `1..=|z|`; each slope equals `B(z↾n)`.
pub fn cdf_slope_bounds<M: Martingale>(osc: &Oscillator<M>, z: &BinWord) -> Result<DerivBounds> {
    dyadic_deriv_bounds(&CdfFn(osc), z, 1, z.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::tabulate;
    use crate::oscillator::savings::{savings_transform, Savings};
    use crate::oscillator::strategy::{strategy_by_name, StrategyMartingale};
    use crate::rat::{int, ratio};

    #[test]
    fn idle_strategy() {
        let m = MartingaleTable::constant(6, int(2)).unwrap();
        let p = build_oscillator(&m, 6).unwrap();
        assert!(p.b.table().entries().all(|(_, v)| *v == int(2)));
        assert_eq!(p.phase(&BinWord::empty()).unwrap(), Phase::Up);
        assert_eq!(
            count_crossings(&p, &BinWord::parse("010110").unwrap()).unwrap(),
            0
        );
        assert_eq!(count_crossings(&p, &BinWord::empty()).unwrap(), 0);
    }

    #[test]
    fn doubling_oscillates() {
        let m = Savings(StrategyMartingale(strategy_by_name("double0").unwrap()));
        let osc = Oscillator::from_savings(m);
        let z = BinWord::repeat(false, 8);
        let t = trace_path(&osc, &z).unwrap();
        let expect = [2, 5, 3, 5, 2, 5, 3, 5, 2].map(|x| ratio(x, if x == 5 { 2 } else { 1 }));
        assert_eq!(t.b, expect);
        assert_eq!(t.crossings(), 4);
    }

    #[test]
    fn savings_precondition() {
        let raw = MartingaleTable::new(
            tabulate(&StrategyMartingale(strategy_by_name("double1").unwrap()), 6).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            build_oscillator(&raw, 6),
            Err(Error::Precondition(_))
        ));
        let p = build_oscillator(&savings_transform(&raw).unwrap(), 6).unwrap();
        assert!(p.invariant_violations().is_empty());
        assert!(p.b.check_fairness().is_empty());
    }

    #[test]
    fn slopes_are_b_values() {
        let osc = Oscillator::from_savings(Savings(StrategyMartingale(
            strategy_by_name("double0").unwrap(),
        )));
        let z = BinWord::repeat(false, 12);
        let bounds = cdf_slope_bounds(&osc, &z).unwrap();
        assert_eq!(bounds.max_slope, int(3));
        assert_eq!(bounds.min_slope, int(2));
    }
}
