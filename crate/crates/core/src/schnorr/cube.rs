use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

use super::tree::{child_bit, cube_tree, zip, Node};

const MAX_LEVEL: u32 = 62;

/// `Π_j [i_j 2^{-k}, (i_j + 1) 2^{-k}]` in `[0,1]^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<u64>,
}

impl DyadicCube {
    pub fn new(level: u32, index: Vec<u64>) -> Result<Self> {
        if index.is_empty() {
            return Err(Error::Parameter(
                "cube needs at least one coordinate".into(),
            ));
        }
        if level > MAX_LEVEL {
            return Err(Error::Parameter(format!(
                "cube level {level} above {MAX_LEVEL}"
            )));
        }
        if let Some(i) = index.iter().find(|&&i| i >> level != 0) {
            return Err(Error::Parameter(format!(
                "cube index {i} out of range at level {level}"
            )));
        }
        Ok(Self { level, index })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            level: 0,
            index: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// `2^{-n·k}`.
    pub fn measure(&self) -> Rat {
        pow2(-((self.dim() as u32 * self.level) as i64))
    }

    pub fn side(&self) -> Rat {
        pow2(-(self.level as i64))
    }

    pub fn lower(&self, j: usize) -> Rat {
        Rat::from_integer(self.index[j].into()) * self.side()
    }

    pub fn upper(&self, j: usize) -> Rat {
        Rat::from_integer((self.index[j] + 1).into()) * self.side()
    }

    /// Closed containment of the cube `other` in `self`.
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        other.level >= self.level
            && self
                .index
                .iter()
                .zip(&other.index)
                .all(|(a, b)| b >> (other.level - self.level) == *a)
    }

    /// Closed containment of a point.
    pub fn contains_point(&self, x: &[Rat]) -> bool {
        (0..self.dim()).all(|j| self.lower(j) <= x[j] && x[j] <= self.upper(j))
    }

    /// The interleaved word of length `n·k` naming the cube.
    pub fn to_word(&self) -> BinWord {
        let mut bits = Vec::with_capacity(self.dim() * self.level as usize);
        for l in (0..self.level).rev() {
            for i in &self.index {
                bits.push((i >> l) & 1 == 1);
            }
        }
        BinWord::from_bits(bits)
    }

    pub fn from_word(dim: usize, w: &BinWord) -> Result<Self> {
        if dim == 0 || w.len() % dim != 0 {
            return Err(Error::InsufficientPrefix {
                needed: w.len().div_ceil(dim.max(1)) * dim.max(1),
                available: w.len(),
            });
        }
        let level = (w.len() / dim) as u32;
        let mut index = vec![0u64; dim];
        for (p, &b) in w.bits().iter().enumerate() {
            index[p % dim] = 2 * index[p % dim] + b as u64;
        }
        Self::new(level, index)
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dim())
            .map(|j| {
                format!(
                    "[{}, {}]",
                    rat::fmt(&self.lower(j)),
                    rat::fmt(&self.upper(j))
                )
            })
            .collect();
        write!(f, "{}", parts.join("×"))
    }
}

fn locate<T: Clone + PartialEq>(node: &Node<T>, dim: usize, x: &[Rat]) -> Result<T> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch(dim, x.len()));
    }
    if x.iter().any(|c| c.is_negative() || *c > Rat::one()) {
        return Err(Error::OutOfRange(format!(
            "{:?}",
            x.iter().map(rat::fmt).collect::<Vec<_>>()
        )));
    }
    let mut node = node;
    let mut level = 0u32;
    let mut idx = vec![0u64; dim];
    loop {
        match node {
            Node::Leaf(v) => return Ok(v.clone()),
            Node::Split(cs) => {
                let half = pow2(-(level as i64 + 1));
                let mut c = 0usize;
                for j in 0..dim {
                    let mid = Rat::from_integer((2 * idx[j] + 1).into()) * &half;
                    if x[j] == mid {
                        return Err(Error::Boundary(format!(
                            "coordinate {j} = {} splits a cube at level {}",
                            rat::fmt(&x[j]),
                            level + 1
                        )));
                    }
                    let b = (x[j] > mid) as u64;
                    idx[j] = 2 * idx[j] + b;
                    c = (c << 1) | b as usize;
                }
                node = &cs[c];
                level += 1;
            }
        }
    }
}

/// A finite union of dyadic cubes in `[0,1]^n`, as a canonical `2^n`-ary
/// tree. Sets are compared up to boundaries, which carry no measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicCubeSet {
    dim: usize,
    root: Node<bool>,
}

impl DyadicCubeSet {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            root: Node::Leaf(false),
        }
    }

    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            root: Node::Leaf(true),
        }
    }

    pub fn from_cube(c: &DyadicCube) -> Self {
        Self {
            dim: c.dim(),
            root: cube_tree(c.dim(), c.level, &c.index, true, false),
        }
    }

    pub fn from_cubes(dim: usize, cubes: &[DyadicCube]) -> Result<Self> {
        cubes
            .iter()
            .try_fold(Self::empty(dim), |acc, c| acc.union(&Self::from_cube(c)))
    }

    /// The box `Π [lo_j, hi_j]` with dyadic corners in `[0,1]`; an empty
    /// side gives the empty set.
    pub fn from_box(lo: &[Dyadic], hi: &[Dyadic]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(lo.len(), hi.len()));
        }
        if lo.is_empty() {
            return Err(Error::Parameter("box needs at least one coordinate".into()));
        }
        if let Some(x) = lo.iter().chain(hi).find(|x| !x.in_unit()) {
            return Err(Error::OutOfRange(x.to_string()));
        }
        let dim = lo.len();
        if lo.iter().zip(hi).any(|(a, b)| a >= b) {
            return Ok(Self::empty(dim));
        }
        let depth = lo.iter().chain(hi).map(Dyadic::level).max().unwrap_or(0);
        if depth > MAX_LEVEL {
            return Err(Error::Parameter(format!(
                "box corner finer than level {MAX_LEVEL}"
            )));
        }
        let lo: Vec<BigInt> = lo.iter().map(|x| x.numerator_at(depth)).collect();
        let hi: Vec<BigInt> = hi.iter().map(|x| x.numerator_at(depth)).collect();
        fn build(
            dim: usize,
            depth: u32,
            level: u32,
            idx: &mut Vec<u64>,
            lo: &[BigInt],
            hi: &[BigInt],
        ) -> Node<bool> {
            let shift = depth - level;
            let mut inside = true;
            for j in 0..dim {
                let a = BigInt::from(idx[j]) << shift;
                let b = BigInt::from(idx[j] + 1) << shift;
                if b <= lo[j] || a >= hi[j] {
                    return Node::Leaf(false);
                }
                inside &= lo[j] <= a && b <= hi[j];
            }
            if inside {
                return Node::Leaf(true);
            }
            let children = (0..1usize << dim)
                .map(|c| {
                    let saved = idx.clone();
                    for (j, i) in idx.iter_mut().enumerate() {
                        *i = 2 * *i + child_bit(dim, c, j);
                    }
                    let n = build(dim, depth, level + 1, idx, lo, hi);
                    *idx = saved;
                    n
                })
                .collect();
            Node::split(children)
        }
        Ok(Self {
            dim,
            root: build(dim, depth, 0, &mut vec![0; dim], &lo, &hi),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dim: self.dim,
            root: zip(self.dim, &self.root, &other.root, &|a, b| *a || *b),
        })
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dim: self.dim,
            root: zip(self.dim, &self.root, &other.root, &|a, b| *a && *b),
        })
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            dim: self.dim,
            root: zip(self.dim, &self.root, &other.root, &|a, b| *a && !*b),
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            dim: self.dim,
            root: self.root.map(&|a| !*a),
        }
    }

    pub fn measure(&self) -> Rat {
        self.root
            .integrate(self.dim, &|v| if *v { Rat::one() } else { Rat::zero() })
    }

    pub fn is_empty(&self) -> bool {
        self.root == Node::Leaf(false)
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    /// Deepest split level; every cube of the set has level at most this.
    pub fn resolution(&self) -> usize {
        self.root.depth()
    }

    /// The maximal cubes of the canonical tree.
    pub fn leaves(&self) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        self.root.for_each_leaf(self.dim, &mut |level, idx, v| {
            if *v {
                out.push(DyadicCube {
                    level,
                    index: idx.to_vec(),
                });
            }
        });
        out
    }

    /// Membership of a point in the interior of the set; a point on a face
    /// where the tree splits is rejected.
    pub fn contains(&self, x: &[Rat]) -> Result<bool> {
        locate(&self.root, self.dim, x)
    }

    pub fn to_json(&self) -> String {
        fn node(n: &Node<bool>) -> Value {
            match n {
                Node::Leaf(true) => Value::from("full"),
                Node::Leaf(false) => Value::from("empty"),
                Node::Split(cs) => Value::Array(cs.iter().map(node).collect()),
            }
        }
        serde_json::json!({ "dim": self.dim, "node": node(&self.root) }).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::parse("cube set", text, reason);
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let dim = v["dim"]
            .as_u64()
            .filter(|d| (1..=8).contains(d))
            .ok_or_else(|| bad("missing or invalid \"dim\"".into()))? as usize;
        fn node(v: &Value, dim: usize) -> std::result::Result<Node<bool>, String> {
            match v {
                Value::String(s) if s == "full" => Ok(Node::Leaf(true)),
                Value::String(s) if s == "empty" => Ok(Node::Leaf(false)),
                Value::Array(cs) if cs.len() == 1 << dim => Ok(Node::split(
                    cs.iter()
                        .map(|c| node(c, dim))
                        .collect::<std::result::Result<_, _>>()?,
                )),
                other => Err(format!("bad node {other}")),
            }
        }
        Ok(Self {
            dim,
            root: node(&v["node"], dim).map_err(bad)?,
        })
    }
}

/// A function on `[0,1]^n` constant on the cells of a cube complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepField {
    dim: usize,
    root: Node<Rat>,
}

impl StepField {
    pub fn constant(dim: usize, c: Rat) -> Self {
        Self {
            dim,
            root: Node::Leaf(c),
        }
    }

    /// `inside` on the set, `outside` off it.
    pub fn indicator(set: &DyadicCubeSet, inside: Rat, outside: Rat) -> Self {
        Self {
            dim: set.dim,
            root: set
                .root
                .map(&|v| if *v { inside.clone() } else { outside.clone() }),
        }
    }

    /// A one-dimensional step function with dyadic breakpoints.
    pub fn from_step_fn(f: &crate::piecewise::PiecewiseFn) -> Result<Self> {
        if f.mode() != crate::piecewise::Mode::Step {
            return Err(Error::Piecewise(
                "only step functions are piecewise constant".into(),
            ));
        }
        let bps = f.breakpoints();
        let mut acc = Self::constant(1, Rat::zero());
        for (w, v) in bps.windows(2).zip(f.values()) {
            let seg = interval_set(&w[0], &w[1])?;
            acc = acc.add(&Self::indicator(&seg, v.clone(), Rat::zero()))?;
        }
        Ok(acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            root: zip(self.dim, &self.root, &other.root, &|a, b| a + b),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self {
            dim: self.dim,
            root: self.root.map(&|v| v * c),
        }
    }

    pub fn integral(&self) -> Rat {
        self.root.integrate(self.dim, &Rat::clone)
    }

    /// `∫ |f|^p` for integer `p ≥ 1`.
    pub fn abs_pow_integral(&self, p: u32) -> Rat {
        self.root.integrate(self.dim, &|v| rat::pow(&v.abs(), p))
    }

    pub fn sup_abs(&self) -> Rat {
        let mut m = Rat::zero();
        self.root.for_each_leaf(self.dim, &mut |_, _, v| {
            if v.abs() > m {
                m = v.abs();
            }
        });
        m
    }

    /// `∫_C f`.
    pub fn integral_over(&self, c: &DyadicCube) -> Result<Rat> {
        let mask = DyadicCubeSet::from_cube(c);
        if mask.dim != self.dim {
            return Err(Error::DimensionMismatch(self.dim, mask.dim));
        }
        let masked = zip(self.dim, &self.root, &mask.root, &|v, m| {
            if *m {
                v.clone()
            } else {
                Rat::zero()
            }
        });
        Ok(masked.integrate(self.dim, &Rat::clone))
    }

    pub fn eval(&self, x: &[Rat]) -> Result<Rat> {
        locate(&self.root, self.dim, x)
    }
}

/// `[a, b]` as a one-dimensional cube set, for dyadic `a < b`.
pub fn interval_set(a: &Dyadic, b: &Dyadic) -> Result<DyadicCubeSet> {
    if a >= b {
        return Err(Error::EmptyInterval(a.to_string(), b.to_string()));
    }
    DyadicCubeSet::from_box(std::slice::from_ref(a), std::slice::from_ref(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn sq(level: u32, i: u64, j: u64) -> DyadicCubeSet {
        DyadicCubeSet::from_cube(&DyadicCube::new(level, vec![i, j]).unwrap())
    }

    #[test]
    fn algebra_examples() {
        let s = sq(2, 1, 3).union(&sq(1, 1, 0)).unwrap();
        assert_eq!(DyadicCubeSet::full(2).intersection(&s).unwrap(), s);
        let u = sq(1, 0, 0).union(&sq(1, 1, 1)).unwrap();
        assert_eq!(u.measure(), ratio(1, 2));
        assert!(u.difference(&u).unwrap().is_empty());
        assert_eq!(u.difference(&u).unwrap().measure(), int(0));
    }

    #[test]
    fn canonical_merge() {
        let halves = DyadicCubeSet::from_cubes(
            1,
            &[
                DyadicCube::new(1, vec![0]).unwrap(),
                DyadicCube::new(1, vec![1]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(halves, DyadicCubeSet::full(1));
        assert_eq!(halves.leaves(), vec![DyadicCube::unit(1)]);
    }

    #[test]
    fn interior_membership() {
        let s = sq(1, 0, 1);
        assert!(s.contains(&[ratio(1, 3), ratio(2, 3)]).unwrap());
        assert!(!s.contains(&[ratio(2, 3), ratio(2, 3)]).unwrap());
        assert!(matches!(
            s.contains(&[ratio(1, 2), ratio(2, 3)]),
            Err(Error::Boundary(_))
        ));
        assert!(matches!(
            s.contains(&[ratio(1, 3)]),
            Err(Error::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = sq(2, 1, 3).union(&sq(1, 1, 0)).unwrap();
        let text = s.to_json();
        assert_eq!(DyadicCubeSet::from_json(&text).unwrap(), s);
        assert_eq!(DyadicCubeSet::from_json(&text).unwrap().to_json(), text);
        assert!(DyadicCubeSet::from_json(r#"{"dim": 1, "node": ["full"]}"#).is_err());
    }

    #[test]
    fn cube_words() {
        let c = DyadicCube::new(2, vec![1, 2]).unwrap();
        assert_eq!(c.to_word().as_string(), "0110");
        assert_eq!(DyadicCube::from_word(2, &c.to_word()).unwrap(), c);
    }

    #[test]
    fn field_norms() {
        assert_eq!(StepField::constant(1, int(1)).abs_pow_integral(3), int(1));
        let half = interval_set(&Dyadic::zero(), &Dyadic::parse("1/2").unwrap()).unwrap();
        assert_eq!(
            StepField::indicator(&half, int(1), int(0)).abs_pow_integral(1),
            ratio(1, 2)
        );
        let quarter = interval_set(&Dyadic::zero(), &Dyadic::parse("1/4").unwrap()).unwrap();
        assert_eq!(
            StepField::indicator(&quarter, int(2), int(0)).abs_pow_integral(2),
            int(1)
        );
    }

    #[test]
    fn interval_blocks() {
        let s = interval_set(
            &Dyadic::parse("1/8").unwrap(),
            &Dyadic::parse("7/8").unwrap(),
        )
        .unwrap();
        assert_eq!(s.measure(), ratio(3, 4));
        assert_eq!(s.leaves().len(), 4);
    }
}
