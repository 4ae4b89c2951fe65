use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::{self, pow2, Rat};

use super::cube::{DyadicCube, DyadicCubeSet, StepField};
use super::test::Sigma01Enum;

const MAX_SCALE: u32 = 64;

/// `h(x) = max(0, 1 − N·d(x, V_t))` with the sup-norm distance, and the
/// certificate `‖1_V − h‖_p < ε` split as `λ(V ∖ V_t) < (ε/2)^p` plus
/// `∫ |1_{V_t} − h|^p < (ε/2)^p`.
#[derive(Clone, Debug, Serialize)]
pub struct CharApprox {
    pub dim: usize,
    pub stage: usize,
    /// `N = 2^scale`.
    pub scale: u32,
    pub p: u32,
    #[serde(with = "rat::serde_str")]
    pub eps: Rat,
    /// `λ(V ∖ V_t)`.
    #[serde(with = "rat::serde_str")]
    pub tail: Rat,
    /// Upper bound on `∫ |1_{V_t} − h|^p`, exact in one dimension.
    #[serde(with = "rat::serde_str")]
    pub ramp: Rat,
    pub ramp_exact: bool,
    #[serde(skip)]
    cubes: Vec<DyadicCube>,
}

impl CharApprox {
    pub fn n(&self) -> Rat {
        pow2(self.scale as i64)
    }

    /// `(ε/2)^p`.
    pub fn budget(&self) -> Rat {
        rat::pow(&(&self.eps / rat::int(2)), self.p)
    }

    pub fn certified(&self) -> bool {
        let b = self.budget();
        self.tail < b && self.ramp < b
    }

    pub fn support(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn eval(&self, x: &[Rat]) -> Result<Rat> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, x.len()));
        }
        let Some(d) = sup_distance(&self.cubes, x) else {
            return Ok(Rat::zero());
        };
        Ok(rat::max(&Rat::zero(), &(Rat::one() - self.n() * d)))
    }
}

fn sup_distance(cubes: &[DyadicCube], x: &[Rat]) -> Option<Rat> {
    cubes
        .iter()
        .map(|c| {
            (0..c.dim())
                .map(|j| {
                    let below = c.lower(j) - &x[j];
                    let above = &x[j] - c.upper(j);
                    rat::max(&Rat::zero(), &rat::max(&below, &above))
                })
                .max()
                .unwrap()
        })
        .min()
}

/// `∫_0^a (1 − N u)^p du` for `0 ≤ a ≤ 1/N`.
fn ramp_integral(n: &Rat, a: &Rat, p: u32) -> Rat {
    let q = Rat::one() - n * a;
    (Rat::one() - rat::pow(&q, p + 1)) / (n * rat::int(p as i64 + 1))
}

/// Exact `∫ (h − 1_{V_t})^p` off `V_t` in one dimension.
fn ramp_exact(set: &DyadicCubeSet, n: &Rat, p: u32) -> Rat {
    let cubes = set.leaves();
    if cubes.is_empty() {
        return Rat::zero();
    }
    let reach = Rat::one() / n;
    let mut total = Rat::zero();
    let gap = |a: Rat, b: Rat, two_sided: bool| {
        let w = &b - &a;
        if two_sided {
            ramp_integral(n, &rat::min(&(w / rat::int(2)), &reach), p) * rat::int(2)
        } else {
            ramp_integral(n, &rat::min(&w, &reach), p)
        }
    };
    let first = cubes[0].lower(0);
    if first.is_positive() {
        total += gap(Rat::zero(), first, false);
    }
    for w in cubes.windows(2) {
        let (a, b) = (w[0].upper(0), w[1].lower(0));
        if a < b {
            total += gap(a, b, true);
        }
    }
    let last = cubes.last().unwrap().upper(0);
    if last < Rat::one() {
        total += gap(last, Rat::one(), false);
    }
    total
}

/// Union bound on the measure of `{0 < d(x, V_t) < 1/N}`, where the ramp
/// lives; the integrand there is at most 1.
fn ramp_enclosure(set: &DyadicCubeSet, n: &Rat) -> Rat {
    let dim = set.dim() as u32;
    let widen = rat::int(2) / n;
    let total: Rat = set
        .leaves()
        .iter()
        .map(|c| {
            let s = c.side();
            rat::pow(&(&s + &widen), dim) - rat::pow(&s, dim)
        })
        .sum();
    rat::min(&total, &Rat::one())
}

/// A continuous `h` with a certified `‖1_V − h‖_p < ε`, for integer `p ≥ 1`.
/// `N` is the least power of two whose ramp passes the certificate.
pub fn char_approx(v: &Sigma01Enum, eps: &Rat, p: u32) -> Result<CharApprox> {
    if !eps.is_positive() {
        return Err(Error::Parameter(format!(
            "ε must be positive, got {}",
            rat::fmt(eps)
        )));
    }
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    let budget = rat::pow(&(eps / rat::int(2)), p);
    let stage = v.modulus(&budget)?;
    let set = v.stage(stage);
    let tail = v.missing(stage);
    let one_dim = set.dim() == 1;
    for scale in 0..=MAX_SCALE {
        let n = pow2(scale as i64);
        let ramp = if set.is_empty() || set.complement().is_empty() {
            Rat::zero()
        } else if one_dim {
            ramp_exact(set, &n, p)
        } else {
            ramp_enclosure(set, &n)
        };
        if ramp < budget {
            return Ok(CharApprox {
                dim: set.dim(),
                stage,
                scale,
                p,
                eps: eps.clone(),
                tail,
                ramp,
                ramp_exact: one_dim,
                cubes: set.leaves(),
            });
        }
    }
    Err(Error::Contract(format!(
        "no N up to 2^{MAX_SCALE} certifies the ramp below {}",
        rat::fmt(&budget)
    )))
}

/// `∫ |f|^p` with `p` given exactly, and `‖f‖_p` when it is rational.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LpNorm {
    pub p: u32,
    #[serde(with = "rat::serde_str")]
    pub power: Rat,
    #[serde(serialize_with = "ser_opt")]
    pub norm: Option<Rat>,
}

fn ser_opt<S: serde::Serializer>(x: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&rat::fmt(v)),
        None => s.serialize_none(),
    }
}

/// Only integer exponents are supported; other `p` are a parameter error.
pub fn lp_norm(f: &StepField, p: &Rat) -> Result<LpNorm> {
    let p = rat::integer_exponent(p)?;
    let power = f.abs_pow_integral(p);
    let norm = rat::exact_root(&power, p);
    Ok(LpNorm { p, power, norm })
}

/// `(2C)^{1−p} ε^p`: an L1 distance below this between functions bounded
/// by `C` forces an Lp distance below `ε`.
pub fn l1_to_lp_threshold(c: &Rat, eps: &Rat, p: u32) -> Result<Rat> {
    if !c.is_positive() || !eps.is_positive() || p == 0 {
        return Err(Error::Parameter("need C > 0, ε > 0 and p ≥ 1".into()));
    }
    let two_c = c * rat::int(2);
    Ok(rat::pow(eps, p) / rat::pow(&two_c, p - 1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct L1ToLp {
    #[serde(with = "rat::serde_str")]
    pub l1: Rat,
    #[serde(with = "rat::serde_str")]
    pub threshold: Rat,
    #[serde(with = "rat::serde_str")]
    pub lp_power: Rat,
    #[serde(with = "rat::serde_str")]
    pub eps_power: Rat,
    pub premise: bool,
    pub conclusion: bool,
}

impl L1ToLp {
    /// The premise implies the conclusion.
    pub fn holds(&self) -> bool {
        !self.premise || self.conclusion
    }
}

/// Both sides of the L1-to-Lp step for `g`, `h` bounded by `C`.
pub fn check_l1_to_lp(g: &StepField, h: &StepField, c: &Rat, eps: &Rat, p: u32) -> Result<L1ToLp> {
    for (name, f) in [("g", g), ("h", h)] {
        let s = f.sup_abs();
        if s > *c {
            return Err(Error::Precondition(format!(
                "sup |{name}| = {} exceeds C = {}",
                rat::fmt(&s),
                rat::fmt(c)
            )));
        }
    }
    let threshold = l1_to_lp_threshold(c, eps, p)?;
    let d = g.sub(h)?;
    let l1 = d.abs_pow_integral(1);
    let lp_power = d.abs_pow_integral(p);
    let eps_power = rat::pow(eps, p);
    Ok(L1ToLp {
        premise: l1 < threshold,
        conclusion: lp_power < eps_power,
        l1,
        threshold,
        lp_power,
        eps_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Dyadic;
    use crate::rat::{int, ratio};
    use crate::schnorr::cube::interval_set;

    #[test]
    fn trivial_sets() {
        for dim in [1, 2] {
            let full = char_approx(
                &Sigma01Enum::constant(DyadicCubeSet::full(dim)),
                &ratio(1, 8),
                2,
            )
            .unwrap();
            assert_eq!(full.ramp, int(0));
            assert_eq!(full.eval(&vec![ratio(1, 3); dim]).unwrap(), int(1));
            let empty = char_approx(
                &Sigma01Enum::constant(DyadicCubeSet::empty(dim)),
                &ratio(1, 8),
                2,
            )
            .unwrap();
            assert_eq!(empty.eval(&vec![ratio(1, 3); dim]).unwrap(), int(0));
            assert!(full.certified() && empty.certified());
        }
    }

    #[test]
    fn half_interval() {
        let v = interval_set(&Dyadic::zero(), &Dyadic::parse("1/2").unwrap()).unwrap();
        let h = char_approx(&Sigma01Enum::constant(v), &ratio(1, 4), 1).unwrap();
        // ramp area 1/(2N) < 1/8 first at N = 8
        assert_eq!(h.scale, 3);
        assert_eq!(h.ramp, ratio(1, 16));
        assert_eq!(h.eval(&[ratio(9, 16)]).unwrap(), ratio(1, 2));
        assert_eq!(h.eval(&[ratio(3, 4)]).unwrap(), int(0));
        assert!(h.certified());
    }

    #[test]
    fn two_dim_enclosure() {
        let v = DyadicCubeSet::from_cube(&DyadicCube::new(1, vec![0, 1]).unwrap());
        let h = char_approx(&Sigma01Enum::constant(v), &ratio(1, 2), 1).unwrap();
        assert!(!h.ramp_exact);
        assert!(h.certified());
        assert_eq!(h.eval(&[ratio(1, 4), ratio(3, 4)]).unwrap(), int(1));
    }

    #[test]
    fn norms() {
        let one = StepField::constant(1, int(1));
        assert_eq!(lp_norm(&one, &int(3)).unwrap().power, int(1));
        let q = interval_set(&Dyadic::zero(), &Dyadic::parse("1/4").unwrap()).unwrap();
        let f = StepField::indicator(&q, int(2), int(0));
        let n = lp_norm(&f, &int(2)).unwrap();
        assert_eq!(n.power, int(1));
        assert_eq!(n.norm, Some(int(1)));
        assert!(lp_norm(&f, &ratio(3, 2)).is_err());
    }

    #[test]
    fn l1_to_lp() {
        assert_eq!(
            l1_to_lp_threshold(&int(1), &ratio(1, 2), 2).unwrap(),
            ratio(1, 8)
        );
        let q = interval_set(&Dyadic::zero(), &Dyadic::parse("1/16").unwrap()).unwrap();
        let g = StepField::indicator(&q, int(1), int(0));
        let h = StepField::constant(1, int(0));
        let r = check_l1_to_lp(&g, &h, &int(1), &ratio(1, 2), 2).unwrap();
        assert!(r.premise && r.conclusion);
        assert!(check_l1_to_lp(&g.scale(&int(3)), &h, &int(1), &ratio(1, 2), 2).is_err());
    }
}
