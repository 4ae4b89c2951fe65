//! Exact piecewise-linear and step functions on `[0,1]` with dyadic
//! breakpoints, and the slope / variation machinery that works on any
//! exactly evaluable function.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::word::BinWord;

/// A function that can be evaluated exactly at (some) rational points.
pub trait PointEval {
    fn eval_at(&self, x: &Rat) -> Result<Rat>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One value per interval `[b_i, b_{i+1})`; the last interval is closed.
    Step,
    /// One value per breakpoint, linear in between.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiecewiseFn {
    mode: Mode,
    breakpoints: Vec<Dyadic>,
    #[serde(with = "rat::serde_vec")]
    values: Vec<Rat>,
    /// `k` when the breakpoints are exactly `i·2^{-k}`, `0 ≤ i ≤ 2^k`.
    #[serde(skip)]
    grid: Option<u32>,
}

#[derive(Deserialize)]
struct RawPiecewise {
    mode: Mode,
    breakpoints: Vec<Dyadic>,
    #[serde(with = "rat::serde_vec")]
    values: Vec<Rat>,
}

impl<'de> Deserialize<'de> for PiecewiseFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPiecewise::deserialize(d)?;
        PiecewiseFn::new(raw.mode, raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}

impl PiecewiseFn {
    pub fn new(mode: Mode, breakpoints: Vec<Dyadic>, values: Vec<Rat>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Piecewise("need at least two breakpoints".into()));
        }
        if breakpoints[0] != Dyadic::zero() || *breakpoints.last().unwrap() != Dyadic::one() {
            return Err(Error::Piecewise(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Piecewise(format!(
                "breakpoints not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        let expected = match mode {
            Mode::Step => breakpoints.len() - 1,
            Mode::Linear => breakpoints.len(),
        };
        if values.len() != expected {
            return Err(Error::Piecewise(format!(
                "{mode:?} mode with {} breakpoints needs {expected} values, got {}",
                breakpoints.len(),
                values.len()
            )));
        }
        let k = (breakpoints.len() - 1).trailing_zeros();
        let grid = ((breakpoints.len() - 1).is_power_of_two()
            && breakpoints
                .iter()
                .enumerate()
                .all(|(i, b)| b.level() <= k && b.numerator_at(k) == BigInt::from(i)))
        .then_some(k);
        Ok(Self {
            mode,
            breakpoints,
            values,
            grid,
        })
    }

    pub fn linear(breakpoints: Vec<Dyadic>, values: Vec<Rat>) -> Result<Self> {
        Self::new(Mode::Linear, breakpoints, values)
    }

    pub fn step(breakpoints: Vec<Dyadic>, values: Vec<Rat>) -> Result<Self> {
        Self::new(Mode::Step, breakpoints, values)
    }

    /// `x ↦ c·x`.
    pub fn scaled_identity(c: Rat) -> Self {
        Self::linear(vec![Dyadic::zero(), Dyadic::one()], vec![Rat::zero(), c]).unwrap()
    }

    pub fn identity() -> Self {
        Self::scaled_identity(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::linear(vec![Dyadic::zero(), Dyadic::one()], vec![c.clone(), c]).unwrap()
    }

    /// Linear interpolation of values given at every `i·2^{-depth}`.
    pub fn from_grid_values(depth: u32, values: Vec<Rat>) -> Result<Self> {
        let bps = (0..values.len() as u64)
            .map(|i| Dyadic::from_parts(i, depth))
            .collect();
        Self::linear(bps, values)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn breakpoints(&self) -> &[Dyadic] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// The finest breakpoint resolution: every breakpoint is a multiple of
    /// `2^{-resolution}`.
    pub fn resolution(&self) -> u32 {
        self.breakpoints
            .iter()
            .map(Dyadic::level)
            .max()
            .unwrap_or(0)
    }

    /// Index `i` of the segment `[b_i, b_{i+1})` containing `x`, with `x = 1`
    /// assigned to the last segment.
    fn segment(&self, x: &Rat) -> usize {
        let n = self.breakpoints.len();
        if let (Some(k), false) = (self.grid, x.is_negative()) {
            let i: usize = ((x.numer() << k) / x.denom()).try_into().unwrap_or(n);
            return i.min(n - 2);
        }
        let pos = self.breakpoints.partition_point(|b| b.value() <= x);
        pos.clamp(1, n - 1) - 1
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() || *x > Rat::one() {
            return Err(Error::OutOfRange(rat::fmt(x)));
        }
        let i = self.segment(x);
        Ok(match self.mode {
            Mode::Step => self.values[i].clone(),
            Mode::Linear => {
                let (a, b) = (self.breakpoints[i].value(), self.breakpoints[i + 1].value());
                let (fa, fb) = (&self.values[i], &self.values[i + 1]);
                if x == a {
                    fa.clone()
                } else if x == b {
                    fb.clone()
                } else {
                    fa + (fb - fa) * (x - a) / (b - a)
                }
            }
        })
    }

    /// Slopes of the linear segments.
    pub fn segment_slopes(&self) -> Vec<Rat> {
        match self.mode {
            Mode::Step => vec![Rat::zero(); self.values.len()],
            Mode::Linear => self
                .breakpoints
                .windows(2)
                .zip(self.values.windows(2))
                .map(|(b, v)| (&v[1] - &v[0]) / (b[1].value() - b[0].value()))
                .collect(),
        }
    }

    /// `∫₀ˣ f` exactly.
    pub fn integrate(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() || *x > Rat::one() {
            return Err(Error::OutOfRange(rat::fmt(x)));
        }
        let mut acc = Rat::zero();
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            let (a, b) = (w[0].value(), w[1].value());
            if a >= x {
                break;
            }
            let end = if b < x { b.clone() } else { x.clone() };
            acc += match self.mode {
                Mode::Step => &self.values[i] * (&end - a),
                Mode::Linear => {
                    let fa = &self.values[i];
                    let fe = self.eval(&end)?;
                    (fa + fe) * (&end - a) / rat::int(2)
                }
            };
        }
        Ok(acc)
    }

    /// `x ↦ ∫₀ˣ h` for a step function `h`, as a linear-mode function.
    pub fn antiderivative(&self) -> Result<PiecewiseFn> {
        if self.mode != Mode::Step {
            return Err(Error::Piecewise(
                "antiderivative of a linear-mode function is not piecewise linear".into(),
            ));
        }
        let values = self
            .breakpoints
            .iter()
            .map(|b| self.integrate(b.value()))
            .collect::<Result<Vec<_>>>()?;
        PiecewiseFn::linear(self.breakpoints.clone(), values)
    }

    /// The exact `p`-variation over `[0,1]`: for linear mode the breakpoint
    /// partition attains the supremum.
    pub fn total_variation(&self, p: &Rat) -> Result<Rat> {
        check_p(p)?;
        match self.mode {
            Mode::Linear => {
                let e = if p.is_one() {
                    1
                } else {
                    rat::integer_exponent(p)?
                };
                Ok(self
                    .breakpoints
                    .windows(2)
                    .zip(self.values.windows(2))
                    .map(|(b, v)| {
                        let dt = b[1].value() - b[0].value();
                        rat::pow(&(&v[1] - &v[0]).abs(), e) / rat::pow(&dt, e - 1)
                    })
                    .sum())
            }
            Mode::Step => {
                let jumps: Rat = self.values.windows(2).map(|v| (&v[1] - &v[0]).abs()).sum();
                if p.is_one() || jumps.is_zero() {
                    Ok(jumps)
                } else {
                    Err(Error::Parameter(
                        "a step function with a jump has unbounded p-variation for p > 1".into(),
                    ))
                }
            }
        }
    }

    /// `|f(0)| + V_p(f,[0,1])^{1/p}`.
    pub fn p_variation_norm(&self, p: &Rat) -> Result<VariationNorm> {
        let abs_f0 = self.eval(&Rat::zero())?.abs();
        let vp = self.total_variation(p)?;
        if p.is_one() {
            return Ok(VariationNorm::Exact(abs_f0 + vp));
        }
        let e = rat::integer_exponent(p)?;
        Ok(match rat::exact_root(&vp, e) {
            Some(r) => VariationNorm::Exact(abs_f0 + r),
            None => VariationNorm::PowerForm { abs_f0, vp },
        })
    }

    /// `(x, f(x))` at every `i·2^{-depth}`.
    pub fn sample(&self, depth: u32) -> Result<Vec<(Dyadic, Rat)>> {
        Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), depth)
            .into_iter()
            .map(|x| {
                let y = self.eval(x.value())?;
                Ok((x, y))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("piecewise function serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse("piecewise function", s, e.to_string()))
    }
}

impl PointEval for PiecewiseFn {
    fn eval_at(&self, x: &Rat) -> Result<Rat> {
        self.eval(x)
    }
}

/// Renders `(x, f(x))` samples as CSV with exact rational strings.
pub fn samples_to_csv(samples: &[(Dyadic, Rat)]) -> String {
    let mut out = String::from("x,f(x)\n");
    for (x, y) in samples {
        let _ = writeln!(out, "{},{}", x, rat::fmt(y));
    }
    out
}

/// `|f(0)| + V_p^{1/p}` when the root is rational, otherwise the two parts
/// for comparison in `p`-th power form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VariationNorm {
    Exact(Rat),
    PowerForm { abs_f0: Rat, vp: Rat },
}

impl VariationNorm {
    pub fn exact(&self) -> Option<&Rat> {
        match self {
            VariationNorm::Exact(v) => Some(v),
            VariationNorm::PowerForm { .. } => None,
        }
    }
}

fn check_p(p: &Rat) -> Result<()> {
    if *p < Rat::one() {
        Err(Error::Parameter(format!("p = {} < 1", rat::fmt(p))))
    } else {
        Ok(())
    }
}

/// `(f(y) − f(x)) / (y − x)`.
pub fn slope<F: PointEval + ?Sized>(f: &F, x: &Rat, y: &Rat) -> Result<Rat> {
    if x == y {
        return Err(Error::DegeneratePair(rat::fmt(x)));
    }
    for t in [x, y] {
        if t.is_negative() || *t > Rat::one() {
            return Err(Error::OutOfRange(rat::fmt(t)));
        }
    }
    let (dy, dx) = (f.eval_at(y)? - f.eval_at(x)?, y - x);
    if dx.numer().is_one() {
        return Ok(dy * dx.denom());
    }
    Ok(dy / dx)
}

/// Variation sum over the partition of `[x,y]` by all dyadics of
/// denominator `2^depth` plus the endpoints. For `p > 1` each increment is
/// weighted as `|Δf|^p / |Δt|^{p−1}`.
pub fn grid_variation<F: PointEval + ?Sized>(
    f: &F,
    x: &Dyadic,
    y: &Dyadic,
    depth: u32,
    p: &Rat,
) -> Result<Rat> {
    if x >= y {
        return Err(Error::EmptyInterval(x.to_string(), y.to_string()));
    }
    check_p(p)?;
    let e = if p.is_one() {
        1
    } else {
        rat::integer_exponent(p)?
    };
    let grid = Dyadic::grid(x, y, depth);
    let values = grid
        .iter()
        .map(|t| f.eval_at(t.value()))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| {
            let df = (&v[1] - &v[0]).abs();
            if e == 1 {
                df
            } else {
                rat::pow(&df, e) / rat::pow(&(t[1].value() - t[0].value()), e - 1)
            }
        })
        .sum())
}

/// Extremes of the slopes over the basic dyadic intervals
/// `[0.(z↾n), 0.(z↾n) + 2^{-n}]` for `from ≤ n ≤ to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivBounds {
    pub depth: usize,
    pub min_slope: Rat,
    pub max_slope: Rat,
}

pub fn dyadic_deriv_bounds<F: PointEval + ?Sized>(
    f: &F,
    z: &BinWord,
    from: usize,
    to: usize,
) -> Result<DerivBounds> {
    if from > to {
        return Err(Error::Parameter(format!(
            "depth range {from}..{to} is empty"
        )));
    }
    if to > z.len() {
        return Err(Error::InsufficientPrefix {
            needed: to,
            available: z.len(),
        });
    }
    let mut min: Option<Rat> = None;
    let mut max: Option<Rat> = None;
    for n in from..=to {
        let w = z.prefix(n);
        let s = slope(f, &w.left_end(), &w.right_end())?;
        if min.as_ref().is_none_or(|m| s < *m) {
            min = Some(s.clone());
        }
        if max.as_ref().is_none_or(|m| s > *m) {
            max = Some(s);
        }
    }
    Ok(DerivBounds {
        depth: to,
        min_slope: min.unwrap(),
        max_slope: max.unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn d(s: &str) -> Dyadic {
        Dyadic::parse(s).unwrap()
    }

    fn half_step(a: i64, b: i64) -> PiecewiseFn {
        PiecewiseFn::step(vec![d("0"), d("1/2"), d("1")], vec![int(a), int(b)]).unwrap()
    }

    struct Square;
    impl PointEval for Square {
        fn eval_at(&self, x: &Rat) -> Result<Rat> {
            Ok(x * x)
        }
    }

    #[test]
    fn slope_examples() {
        let id = PiecewiseFn::identity();
        assert_eq!(slope(&id, &int(0), &int(1)).unwrap(), int(1));
        assert_eq!(slope(&Square, &int(0), &int(1)).unwrap(), int(1));
        assert!(matches!(
            slope(&id, &ratio(1, 2), &ratio(1, 2)),
            Err(Error::DegeneratePair(_))
        ));
    }

    #[test]
    fn slope_is_symmetric_in_order() {
        let f = PiecewiseFn::scaled_identity(int(3));
        assert_eq!(
            slope(&f, &ratio(3, 4), &ratio(1, 4)).unwrap(),
            slope(&f, &ratio(1, 4), &ratio(3, 4)).unwrap()
        );
    }

    #[test]
    fn grid_variation_examples() {
        let id = PiecewiseFn::identity();
        assert_eq!(
            grid_variation(&id, &d("0"), &d("1"), 3, &int(1)).unwrap(),
            int(1)
        );
        // p = 2: Σ |Δt|² / |Δt| = Σ |Δt| = 1 over 16 cells.
        assert_eq!(
            grid_variation(&id, &d("0"), &d("1"), 4, &int(2)).unwrap(),
            int(1)
        );
    }

    #[test]
    fn grid_variation_errors() {
        let id = PiecewiseFn::identity();
        assert!(matches!(
            grid_variation(&id, &d("1/2"), &d("1/2"), 3, &int(1)),
            Err(Error::EmptyInterval(..))
        ));
        assert!(matches!(
            grid_variation(&id, &d("0"), &d("1"), 3, &ratio(1, 2)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn integrate_examples() {
        let one = PiecewiseFn::constant(int(1));
        assert_eq!(one.integrate(&ratio(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(half_step(1, 0).integrate(&int(1)).unwrap(), ratio(1, 2));
        assert_eq!(half_step(1, -1).integrate(&int(1)).unwrap(), int(0));
        assert_eq!(
            half_step(1, -1).integrate(&ratio(3, 4)).unwrap(),
            ratio(1, 4)
        );
        assert!(one.integrate(&ratio(3, 2)).is_err());
    }

    #[test]
    fn variation_norm_examples() {
        let id = PiecewiseFn::identity();
        assert_eq!(
            id.p_variation_norm(&int(1)).unwrap(),
            VariationNorm::Exact(int(1))
        );
        let c = PiecewiseFn::constant(ratio(1, 3));
        assert_eq!(
            c.p_variation_norm(&int(1)).unwrap(),
            VariationNorm::Exact(ratio(1, 3))
        );
        let g = half_step(1, -1).antiderivative().unwrap();
        assert_eq!(
            g.p_variation_norm(&int(1)).unwrap(),
            VariationNorm::Exact(int(1))
        );
        assert!(id.p_variation_norm(&ratio(1, 2)).is_err());
    }

    #[test]
    fn variation_norm_power_form() {
        // slope 2 on [0,1/2], 0 after: V_2 = 4·(1/2) = 2, no rational root.
        let f = PiecewiseFn::linear(vec![d("0"), d("1/2"), d("1")], vec![int(0), int(1), int(1)])
            .unwrap();
        assert_eq!(
            f.p_variation_norm(&int(2)).unwrap(),
            VariationNorm::PowerForm {
                abs_f0: int(0),
                vp: int(2)
            }
        );
    }

    #[test]
    fn step_eval_takes_right_limit() {
        let h = half_step(1, -1);
        assert_eq!(h.eval(&ratio(1, 2)).unwrap(), int(-1));
        assert_eq!(h.eval(&int(1)).unwrap(), int(-1));
        assert_eq!(h.eval(&int(0)).unwrap(), int(1));
    }

    #[test]
    fn deriv_bounds_examples() {
        let z = BinWord::parse("01101").unwrap();
        let b = dyadic_deriv_bounds(&PiecewiseFn::identity(), &z, 1, 5).unwrap();
        assert_eq!((b.min_slope, b.max_slope), (int(1), int(1)));
        let two = PiecewiseFn::scaled_identity(int(2));
        let b = dyadic_deriv_bounds(&two, &BinWord::parse("0000").unwrap(), 1, 4).unwrap();
        assert_eq!((b.min_slope, b.max_slope), (int(2), int(2)));
        assert!(matches!(
            dyadic_deriv_bounds(&two, &z, 1, 6),
            Err(Error::InsufficientPrefix { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(PiecewiseFn::linear(vec![d("0"), d("1")], vec![int(0)]).is_err());
        assert!(PiecewiseFn::linear(vec![d("0"), d("1/2")], vec![int(0), int(0)]).is_err());
        assert!(
            PiecewiseFn::step(vec![d("0"), d("1/2"), d("1/2"), d("1")], vec![int(0); 3]).is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let f = half_step(1, -1);
        let s = f.to_json();
        assert!(s.contains("\"mode\": \"step\""));
        assert_eq!(PiecewiseFn::from_json(&s).unwrap(), f);
        assert!(PiecewiseFn::from_json("{}").is_err());
    }

    #[test]
    fn csv_samples() {
        let csv = samples_to_csv(&PiecewiseFn::identity().sample(1).unwrap());
        assert_eq!(csv, "x,f(x)\n0/1,0/1\n1/2,1/2\n1/1,1/1\n");
    }
}
