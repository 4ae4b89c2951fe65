use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::piecewise::{PiecewiseFn, PointEval};
use crate::rat::{self, pow2, Rat};

/// A sawtooth on `[p, q]`: `(q − p)·2^k` teeth of width `2^{-k}`, each rising
/// with slope 1 to height `2^{-(k+1)}` and falling back to 0. Zero outside.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZigzagSpec {
    pub p: Dyadic,
    pub q: Dyadic,
    pub k: u32,
}

impl ZigzagSpec {
    /// Requires `0 ≤ p ≤ q ≤ 1` and both endpoints on the grid of `2^{-k}`.
    pub fn new(p: Dyadic, q: Dyadic, k: u32) -> Result<Self> {
        if !p.in_unit() || !q.in_unit() {
            return Err(Error::Spec(format!(
                "endpoints {p}, {q} must lie in [0, 1]"
            )));
        }
        if p > q {
            return Err(Error::Spec(format!("p = {p} exceeds q = {q}")));
        }
        let n = p.level().max(q.level());
        if k < n {
            return Err(Error::Spec(format!(
                "k = {k} is coarser than the endpoint resolution 2^-{n}"
            )));
        }
        Ok(Self { p, q, k })
    }

    pub fn teeth(&self) -> Rat {
        (self.q.value() - self.p.value()) * pow2(self.k as i64)
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if *x < Rat::zero() || *x > Rat::one() {
            return Err(Error::OutOfRange(rat::fmt(x)));
        }
        if x < self.p.value() || x > self.q.value() {
            return Ok(Rat::zero());
        }
        let u = (x - self.p.value()) * pow2(self.k as i64);
        let frac = &u - u.floor();
        // position within the tooth, as a fraction of its width
        let t = if frac <= rat::ratio(1, 2) {
            frac
        } else {
            Rat::one() - frac
        };
        Ok(t * pow2(-(self.k as i64)))
    }

    /// Breakpoints every `2^{-(k+1)}` inside `[p, q]`, plus 0 and 1.
    pub fn to_fn(&self) -> PiecewiseFn {
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        push_teeth(self, &mut bps, &mut vals);
        finish(bps, vals)
    }
}

impl PointEval for ZigzagSpec {
    fn eval_at(&self, x: &Rat) -> Result<Rat> {
        self.eval(x)
    }
}

fn push_point(bps: &mut Vec<Dyadic>, vals: &mut Vec<Rat>, x: Dyadic, v: Rat) {
    if bps.last() != Some(&x) {
        bps.push(x);
        vals.push(v);
    }
}

fn push_teeth(z: &ZigzagSpec, bps: &mut Vec<Dyadic>, vals: &mut Vec<Rat>) {
    let level = z.k + 1;
    let start = z.p.numerator_at(level);
    let end = z.q.numerator_at(level);
    let peak = pow2(-(level as i64));
    let mut i = start.clone();
    while i <= end {
        let up = (&i - &start).is_odd();
        let v = if up { peak.clone() } else { Rat::zero() };
        push_point(bps, vals, Dyadic::from_parts(i.clone(), level), v);
        i += 1u32;
    }
}

fn finish(mut bps: Vec<Dyadic>, mut vals: Vec<Rat>) -> PiecewiseFn {
    if bps.first() != Some(&Dyadic::zero()) {
        bps.insert(0, Dyadic::zero());
        vals.insert(0, Rat::zero());
    }
    let last = vals.last().cloned().unwrap_or_else(Rat::zero);
    push_point(&mut bps, &mut vals, Dyadic::one(), last);
    PiecewiseFn::linear(bps, vals).expect("zigzag breakpoints are increasing")
}

/// `g = Σ_s W(α_s, α_{s+1}; s+1)` over the given stages.
///
/// `α_0` must be 0, the sequence nondecreasing in `[0, 1]`, and `α_s` a
/// multiple of `2^{-s}`. The result is 1-Lipschitz with total variation
/// `α_last` and is constant on `[α_last, 1]`.
pub fn variation_staircase(alphas: &[Dyadic]) -> Result<PiecewiseFn> {
    match alphas.first() {
        None => return Err(Error::Schedule("no stages given".into())),
        Some(a) if *a != Dyadic::zero() => {
            return Err(Error::Schedule(format!("first stage must be 0, got {a}")))
        }
        _ => {}
    }
    for (s, a) in alphas.iter().enumerate() {
        if !a.in_unit() {
            return Err(Error::Schedule(format!("stage {s}: {a} outside [0, 1]")));
        }
        if a.level() as usize > s {
            return Err(Error::Schedule(format!(
                "stage {s}: {a} has resolution 2^-{}, finer than 2^-{s}",
                a.level()
            )));
        }
    }
    if let Some(w) = alphas.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Schedule(format!("stages decrease at {}", w + 1)));
    }
    let mut bps = Vec::new();
    let mut vals = Vec::new();
    for (s, w) in alphas.windows(2).enumerate() {
        if w[0] == w[1] {
            continue;
        }
        let z = ZigzagSpec::new(w[0].clone(), w[1].clone(), s as u32 + 1)?;
        push_teeth(&z, &mut bps, &mut vals);
    }
    Ok(finish(bps, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::grid_variation;
    use crate::rat::{int, ratio};

    fn d(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    fn w01() -> ZigzagSpec {
        ZigzagSpec::new(d("0"), d("1"), 1).unwrap()
    }

    #[test]
    fn zigzag_examples() {
        let z = w01();
        assert_eq!(z.eval(&ratio(1, 4)).unwrap(), ratio(1, 4));
        assert_eq!(z.eval(&int(0)).unwrap(), int(0));
        assert_eq!(z.eval(&ratio(1, 2)).unwrap(), int(0));
        assert_eq!(z.eval(&ratio(5, 8)).unwrap(), ratio(1, 8));
        assert_eq!(
            grid_variation(&z, &d("0"), &d("1"), 2, &int(1)).unwrap(),
            int(1)
        );
    }

    #[test]
    fn fn_form_agrees_with_eval() {
        let z = ZigzagSpec::new(d("1/4"), d("3/4"), 3).unwrap();
        let f = z.to_fn();
        for i in 0..=64 {
            let x = ratio(i, 64);
            assert_eq!(f.eval(&x).unwrap(), z.eval(&x).unwrap(), "x = {x}");
        }
        assert_eq!(f.total_variation(&int(1)).unwrap(), ratio(1, 2));
        assert_eq!(z.teeth(), int(4));
    }

    #[test]
    fn malformed_specs() {
        assert!(matches!(
            ZigzagSpec::new(d("1/2"), d("1/4"), 3),
            Err(Error::Spec(_))
        ));
        assert!(matches!(
            ZigzagSpec::new(d("0"), d("1/8"), 2),
            Err(Error::Spec(_))
        ));
        assert!(ZigzagSpec::new(d("0"), d("1/8"), 3).is_ok());
    }

    #[test]
    fn staircase_examples() {
        let g = variation_staircase(&[d("0"), d("1/2")]).unwrap();
        assert_eq!(g.total_variation(&int(1)).unwrap(), ratio(1, 2));
        let g0 = variation_staircase(&[d("0")]).unwrap();
        assert_eq!(g0.total_variation(&int(1)).unwrap(), int(0));
        assert!(g0.values().iter().all(Zero::is_zero));
    }

    #[test]
    fn staircase_is_one_lipschitz_and_flat_after_last_stage() {
        let alphas = [d("0"), d("1/2"), d("1/2"), d("5/8"), d("11/16")];
        let g = variation_staircase(&alphas).unwrap();
        assert!(g
            .segment_slopes()
            .iter()
            .all(|s| *s == int(1) || *s == int(-1) || s.is_zero()));
        assert_eq!(g.total_variation(&int(1)).unwrap(), ratio(11, 16));
        assert_eq!(g.eval(&ratio(11, 16)).unwrap(), g.eval(&int(1)).unwrap());
        let v = grid_variation(&g, &d("0"), &d("11/16"), 6, &int(1)).unwrap();
        assert_eq!(v, ratio(11, 16));
    }

    #[test]
    fn staircase_schedule_errors() {
        assert!(matches!(
            variation_staircase(&[d("0"), d("1/4")]),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            variation_staircase(&[d("1/2")]),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            variation_staircase(&[d("0"), d("1/2"), d("0")]),
            Err(Error::Schedule(_))
        ));
    }
}
