use num_traits::{One, Signed, Zero};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::piecewise::{PiecewiseFn, PointEval};
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

use super::{Martingale, MartingaleTable, TreeTable};

/// `μ_M[0, 0.σ)`: the sum of `M(τ)·2^{-|τ|}` over the left siblings `τ`
/// hanging off the path to `σ`.
pub fn cdf_at_word<M: Martingale + ?Sized>(m: &M, sigma: &BinWord) -> Result<Rat> {
    let (mut state, _) = m.root()?;
    let mut acc = Rat::zero();
    for (i, &b) in sigma.bits().iter().enumerate() {
        if b {
            let (_, left) = m.child(&state, false)?;
            acc += left * pow2(-(i as i64 + 1));
        }
        state = m.child(&state, b)?.0;
    }
    Ok(acc)
}

/// `cdf(M)(x) = μ_M[0, x)` at a dyadic `x ∈ [0,1]`.
pub fn cdf_at_dyadic<M: Martingale + ?Sized>(m: &M, x: &Dyadic) -> Result<Rat> {
    if !x.in_unit() {
        return Err(Error::OutOfRange(x.to_string()));
    }
    if *x.value() == Rat::one() {
        return Ok(m.root()?.1);
    }
    cdf_at_word(m, &x.to_word(x.level() as usize)?)
}

/// `cdf(M)` viewed as a function; defined at dyadic points only.
pub struct CdfFn<M>(pub M);

impl<M: Martingale> PointEval for CdfFn<M> {
    fn eval_at(&self, x: &Rat) -> Result<Rat> {
        let d = Dyadic::new(x.clone()).map_err(|_| {
            Error::Parameter(format!(
                "cdf at the non-dyadic point {} is only available as an enclosure",
                rat::fmt(x)
            ))
        })?;
        cdf_at_dyadic(&self.0, &d)
    }
}

/// The cdf of a table as a linear-mode function with breakpoints at the
/// table's resolution (the measure is spread uniformly below the leaves).
pub fn cdf_fn(table: &TreeTable) -> PiecewiseFn {
    let depth = table.depth();
    let mut values = Vec::with_capacity((1 << depth) + 1);
    let mut acc = Rat::zero();
    values.push(acc.clone());
    for v in table.level(depth) {
        acc += v;
        values.push(rat::scale_pow2(&acc, depth as u64));
    }
    PiecewiseFn::from_grid_values(depth as u32, values).expect("grid is well formed")
}

/// Claimed bounds `c ≤ M(σ) ≤ d` for every word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub c: Rat,
    pub d: Rat,
}

impl Bounds {
    pub fn new(c: Rat, d: Rat) -> Result<Self> {
        if c.is_negative() || d < c {
            return Err(Error::Parameter(format!(
                "bounds need 0 ≤ c ≤ d, got c = {}, d = {}",
                rat::fmt(&c),
                rat::fmt(&d)
            )));
        }
        Ok(Self { c, d })
    }

    pub fn check(&self, table: &MartingaleTable) -> Result<()> {
        match table
            .table()
            .entries()
            .find(|(_, v)| **v < self.c || **v > self.d)
        {
            Some((word, v)) => Err(Error::InvalidBounds {
                word,
                value: rat::fmt(v),
            }),
            None => Ok(()),
        }
    }
}

/// A closed rational interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    pub fn contains(&self, x: &Rat) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn is_within(&self, lo: &Rat, hi: &Rat) -> bool {
        *lo <= self.lo && self.hi <= *hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// Encloses `cdf(M)(y) − cdf(M)(x)` for rationals `0 ≤ x < y ≤ 1`.
///
/// Leaf cells fully inside `[x, y)` contribute their exact measure. A cell
/// `τ` only partly covered, by length `ℓ` out of `h`, carries between
/// `max(cℓ, μ(τ) − d(h−ℓ))` and `min(dℓ, μ(τ) − c(h−ℓ))` since every
/// subcell density lies in `[c, d]`. The result is intersected with
/// `[c(y−x), d(y−x)]`. Only the two cut cells are checked against the
/// bounds here; [`Bounds::check`] covers the whole table.
pub fn cdf_bounds(m: &MartingaleTable, bounds: &Bounds, x: &Rat, y: &Rat) -> Result<Enclosure> {
    if x.is_negative() || *y > Rat::one() {
        return Err(Error::OutOfRange(format!(
            "[{}, {}]",
            rat::fmt(x),
            rat::fmt(y)
        )));
    }
    if x >= y {
        return Err(Error::EmptyInterval(rat::fmt(x), rat::fmt(y)));
    }
    let depth = m.depth();
    let table = m.table();
    let h = pow2(-(depth as i64));
    let scale = pow2(depth as i64);
    let i0 = (x * &scale).floor().to_integer();
    let i1 = (y * &scale).ceil().to_integer();
    // the cells cut by x and y are the only ones whose density is used
    for i in [&i0, &(&i1 - 1)] {
        let idx: usize = i.try_into().expect("cell index fits");
        let v = table.at(depth, idx);
        if *v < bounds.c || *v > bounds.d {
            return Err(Error::InvalidBounds {
                word: BinWord::from_index(idx as u64, depth),
                value: rat::fmt(v),
            });
        }
    }
    let cell = |i: &num_bigint::BigInt| -> Rat {
        let idx: usize = i.try_into().expect("cell index fits");
        table.at(depth, idx) * &h
    };
    let partial = |mu: Rat, len: Rat| -> (Rat, Rat) {
        let rest = &h - &len;
        let lo = rat::max(&(&bounds.c * &len), &(&mu - &bounds.d * &rest));
        let hi = rat::min(&(&bounds.d * &len), &(&mu - &bounds.c * &rest));
        (lo, hi)
    };
    let (mut lo, mut hi) = (Rat::zero(), Rat::zero());
    let one = num_bigint::BigInt::one();
    if &i1 - &i0 == one {
        let (l, u) = partial(cell(&i0), y - x);
        lo += l;
        hi += u;
    } else {
        let mut first_full = i0.clone();
        let left_end = Rat::from_integer(i0.clone() + 1) * &h;
        if Rat::from_integer(i0.clone()) * &h != *x {
            let (l, u) = partial(cell(&i0), &left_end - x);
            lo += l;
            hi += u;
            first_full += 1;
        }
        let mut last_full = i1.clone();
        let right_start = Rat::from_integer(&i1 - 1) * &h;
        if Rat::from_integer(i1.clone()) * &h != *y {
            let (l, u) = partial(cell(&(&i1 - 1)), y - &right_start);
            lo += l;
            hi += u;
            last_full -= 1;
        }
        if first_full < last_full {
            let a = Dyadic::from_parts(first_full, depth as u32);
            let b = Dyadic::from_parts(last_full, depth as u32);
            let full = cdf_at_dyadic(table, &b)? - cdf_at_dyadic(table, &a)?;
            lo += &full;
            hi += full;
        }
    }
    let len = y - x;
    Ok(Enclosure {
        lo: rat::max(&lo, &(&bounds.c * &len)),
        hi: rat::min(&hi, &(&bounds.d * &len)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::slope;
    use crate::rat::{int, ratio};

    fn d(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    fn skewed() -> MartingaleTable {
        MartingaleTable::from_fn(1, |w| match w.as_string().as_str() {
            "" => int(1),
            "0" => int(2),
            _ => int(0),
        })
        .unwrap()
    }

    #[test]
    fn cdf_examples() {
        let ones = MartingaleTable::constant(3, int(1)).unwrap();
        assert_eq!(cdf_at_dyadic(&ones, &d("3/8")).unwrap(), ratio(3, 8));
        assert_eq!(cdf_at_dyadic(&skewed(), &d("1/2")).unwrap(), int(1));
        assert_eq!(cdf_at_dyadic(&skewed(), &d("0")).unwrap(), int(0));
        assert_eq!(cdf_at_dyadic(&skewed(), &d("1")).unwrap(), int(1));
        assert!(matches!(
            cdf_at_dyadic(&ones, &d("1/16")),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn cdf_slope_over_whole_interval() {
        let two = MartingaleTable::constant(2, int(2)).unwrap();
        let f = CdfFn(&two);
        assert_eq!(slope(&f, &int(0), &int(1)).unwrap(), int(2));
        assert!(f.eval_at(&ratio(1, 3)).is_err());
    }

    #[test]
    fn cdf_fn_matches_pointwise() {
        let m = skewed();
        let f = cdf_fn(m.table());
        for x in ["0", "1/2", "1"] {
            assert_eq!(
                f.eval(d(x).value()).unwrap(),
                cdf_at_dyadic(&m, &d(x)).unwrap()
            );
        }
    }

    #[test]
    fn bounds_examples() {
        // A table with values in {1, 3}.
        let m = MartingaleTable::from_fn(2, |w| match w.as_string().as_str() {
            "" | "0" | "1" => int(2),
            "00" | "10" => int(1),
            _ => int(3),
        })
        .unwrap();
        let b = Bounds::new(int(1), int(3)).unwrap();
        let e = cdf_bounds(&m, &b, &int(0), &ratio(1, 4)).unwrap();
        assert!(e.is_within(&ratio(1, 4), &ratio(3, 4)));
        assert!(e.contains(&ratio(1, 4)));

        let ones = MartingaleTable::constant(3, int(1)).unwrap();
        let b1 = Bounds::new(int(1), int(1)).unwrap();
        let e = cdf_bounds(&ones, &b1, &ratio(1, 3), &ratio(5, 7)).unwrap();
        assert_eq!(
            e,
            Enclosure {
                lo: ratio(8, 21),
                hi: ratio(8, 21)
            }
        );

        let b = Bounds::new(int(1), int(4)).unwrap();
        let e = cdf_bounds(&m, &b, &ratio(1, 3), &ratio(2, 3)).unwrap();
        assert!(e.is_within(&ratio(1, 3), &ratio(4, 3)));
    }

    #[test]
    fn bounds_violation() {
        let m = skewed();
        let b = Bounds::new(int(1), int(2)).unwrap();
        assert!(matches!(
            cdf_bounds(&m, &b, &int(0), &int(1)),
            Err(Error::InvalidBounds { .. })
        ));
    }
}
