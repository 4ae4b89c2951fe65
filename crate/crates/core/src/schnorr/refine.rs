use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::{self, pow2, Rat};

use super::cube::{DyadicCube, DyadicCubeSet, StepField};
use super::test::{SchnorrTest, Sigma01Enum, Target};

/// A cube of `G_m` with the stage it entered, the cube of `G_{m-1}` it came
/// from and the index `r` of the test member it was cut from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProvenanceCube {
    pub cube: DyadicCube,
    pub stage: usize,
    pub parent: Option<usize>,
    pub source: Option<usize>,
}

/// The nested sets `G_0 ⊇ G_1 ⊇ …`, each split into its cubes with
/// provenance, simulated for stages `0..budget`.
#[derive(Clone, Debug)]
pub struct RefinedTest {
    dim: usize,
    levels: Vec<Vec<ProvenanceCube>>,
    sources: BTreeMap<usize, Sigma01Enum>,
    budget: usize,
    partial: bool,
}

/// `r ≥ s` least with `2^{-r} ≤ 2^{-(m+1)} λC`.
pub fn source_index(dim: usize, m: usize, cube_level: u32, stage: usize) -> usize {
    stage.max(m + 1 + dim * cube_level as usize)
}

pub fn refine_test<T: SchnorrTest>(test: &T, m_max: usize, budget: usize) -> Result<RefinedTest> {
    if budget == 0 {
        return Err(Error::Parameter("stage budget must be positive".into()));
    }
    let dim = test.dim();
    let mut levels = vec![vec![ProvenanceCube {
        cube: DyadicCube::unit(dim),
        stage: 0,
        parent: None,
        source: None,
    }]];
    let mut sources: BTreeMap<usize, Sigma01Enum> = BTreeMap::new();
    let mut partial = false;
    for m in 0..m_max {
        let mut next = Vec::new();
        for (i, pc) in levels[m].iter().enumerate() {
            let r = source_index(dim, m, pc.cube.level, pc.stage);
            if !sources.contains_key(&r) {
                let v = test.member(r)?;
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch(dim, v.dim()));
                }
                sources.insert(r, v);
            }
            let v = &sources[&r];
            partial |= v.stage_count() > budget;
            let c = DyadicCubeSet::from_cube(&pc.cube);
            let mut prev = DyadicCubeSet::empty(dim);
            for t in pc.stage..budget {
                let cur = v.stage(t).intersection(&c)?;
                for cube in cur.difference(&prev)?.leaves() {
                    next.push(ProvenanceCube {
                        cube,
                        stage: t,
                        parent: Some(i),
                        source: Some(r),
                    });
                }
                prev = cur;
            }
        }
        levels.push(next);
    }
    Ok(RefinedTest {
        dim,
        levels,
        sources,
        budget,
        partial,
    })
}

/// A stage `t` with `λ(G_m ∖ G_{m,t}) < 2ε`, and the exact residual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GModulus {
    pub m: usize,
    pub stage: usize,
    #[serde(with = "rat::serde_str")]
    pub residual: Rat,
    #[serde(with = "rat::serde_str")]
    pub bound: Rat,
}

impl RefinedTest {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Some test member used had stages beyond the budget.
    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn cubes(&self, m: usize) -> Result<&[ProvenanceCube]> {
        self.levels
            .get(m)
            .map(Vec::as_slice)
            .ok_or(Error::NotBuilt {
                requested: m,
                built: self.m_max(),
            })
    }

    /// `G_{m,t}`.
    pub fn stage_set(&self, m: usize, t: usize) -> Result<DyadicCubeSet> {
        let cubes: Vec<DyadicCube> = self
            .cubes(m)?
            .iter()
            .filter(|pc| pc.stage <= t)
            .map(|pc| pc.cube.clone())
            .collect();
        DyadicCubeSet::from_cubes(self.dim, &cubes)
    }

    /// `G_m` as far as the budget reaches.
    pub fn set(&self, m: usize) -> Result<DyadicCubeSet> {
        self.stage_set(m, self.budget - 1)
    }

    pub fn enumeration(&self, m: usize) -> Result<Sigma01Enum> {
        Sigma01Enum::new(
            (0..self.budget)
                .map(|t| self.stage_set(m, t))
                .collect::<Result<_>>()?,
        )
    }

    /// `(m, t, λG_{m,t})` wherever `λG_{m,t} > 2^{-m}`.
    pub fn measure_violations(&self) -> Result<Vec<(usize, usize, Rat)>> {
        let mut out = Vec::new();
        for m in 0..=self.m_max() {
            let bound = pow2(-(m as i64));
            for t in 0..self.budget {
                let mu = self.stage_set(m, t)?.measure();
                if mu > bound {
                    out.push((m, t, mu));
                }
            }
        }
        Ok(out)
    }

    /// Levels whose cubes overlap in more than a boundary.
    pub fn overlap_violations(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for m in 0..=self.m_max() {
            let total: Rat = self.levels[m].iter().map(|pc| pc.cube.measure()).sum();
            if total != self.set(m)?.measure() {
                out.push(m);
            }
        }
        Ok(out)
    }

    /// Index of the cube of each `G_m` containing the target, if any.
    pub fn target_chain(&self, z: &Target) -> Result<Vec<Option<usize>>> {
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, z.dim()));
        }
        self.levels
            .iter()
            .map(|cubes| {
                for (i, pc) in cubes.iter().enumerate() {
                    if z.in_cube(&pc.cube)? {
                        return Ok(Some(i));
                    }
                }
                Ok(None)
            })
            .collect()
    }

    /// The cubes `C_0 ⊇ C_1 ⊇ …` around the target; a missing cube or a
    /// broken parent link is a contract error.
    pub fn target_cubes(&self, z: &Target) -> Result<Vec<DyadicCube>> {
        let chain = self.target_chain(z)?;
        let mut out: Vec<DyadicCube> = Vec::with_capacity(chain.len());
        for (m, idx) in chain.into_iter().enumerate() {
            let i = idx
                .ok_or_else(|| Error::Contract(format!("no cube of G_{m} contains the target")))?;
            let pc = &self.levels[m][i];
            if let Some(prev) = out.last() {
                let parent =
                    &self.levels[m - 1][pc.parent.expect("cubes past G_0 have parents")].cube;
                if parent != prev || !prev.contains_cube(&pc.cube) {
                    return Err(Error::Contract(format!(
                        "cube of G_{m} at the target is not inside the one of G_{}",
                        m - 1
                    )));
                }
            }
            out.push(pc.cube.clone());
        }
        Ok(out)
    }

    /// `Σ_{i=lo}^{hi} (-1)^i 1_{G_i}`.
    pub fn alternating_field(&self, lo: usize, hi: usize) -> Result<StepField> {
        let mut f = StepField::constant(self.dim, Rat::zero());
        for i in lo..=hi {
            let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
            f = f.add(&StepField::indicator(&self.set(i)?, sign, Rat::zero()))?;
        }
        Ok(f)
    }

    /// The truncation `g_m = Σ_{i≤m} (-1)^i 1_{G_i}`.
    pub fn g_field(&self, m: usize) -> Result<StepField> {
        self.cubes(m)?;
        self.alternating_field(0, m)
    }

    /// `g_m(x)`, with membership taken in the interior of each `G_i`.
    pub fn g_partial(&self, x: &[Rat], m: usize) -> Result<Rat> {
        self.cubes(m)?;
        let mut acc = Rat::zero();
        for i in 0..=m {
            if self.set(i)?.contains(x)? {
                acc += if i % 2 == 0 { Rat::one() } else { -Rat::one() };
            }
        }
        Ok(acc)
    }

    /// `(λC)^{-1} ∫_C g_m`.
    pub fn cube_average(&self, c: &DyadicCube, m: usize) -> Result<Rat> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, c.dim()));
        }
        Ok(self.g_field(m)?.integral_over(c)? / c.measure())
    }

    /// `‖Σ_{i=r}^{m} (-1)^i 1_{G_i}‖_1`.
    pub fn tail_l1(&self, r: usize, m: usize) -> Result<Rat> {
        self.cubes(m)?;
        if r > m {
            return Ok(Rat::zero());
        }
        Ok(self.alternating_field(r, m)?.abs_pow_integral(1))
    }

    /// `λ(G_i ∩ C) / λC`.
    pub fn share_in(&self, c: &DyadicCube, i: usize) -> Result<Rat> {
        let inside = self.set(i)?.intersection(&DyadicCubeSet::from_cube(c))?;
        Ok(inside.measure() / c.measure())
    }

    /// Least `t` with `λ(G_m ∖ G_{m,t}) < 2ε`: take `s` for `G_{m-1}` at
    /// `ε/2`, then for each of the `N` cubes of `G_{m-1,s}` the member's
    /// modulus at `ε/(2N)`. The bound is verified against the last built
    /// stage.
    pub fn g_modulus(&self, m: usize, eps: &Rat) -> Result<GModulus> {
        if *eps <= Rat::zero() {
            return Err(Error::Parameter(format!(
                "modulus needs ε > 0, got {}",
                rat::fmt(eps)
            )));
        }
        let t = self.modulus_stage(m, eps)?;
        let last = self.budget - 1;
        if t > last {
            return Err(Error::NotBuilt {
                requested: t,
                built: last,
            });
        }
        let residual = self.set(m)?.measure() - self.stage_set(m, t)?.measure();
        let bound = eps + eps;
        if residual >= bound {
            return Err(Error::Contract(format!(
                "G_{m} misses {} after stage {t}, not below {}",
                rat::fmt(&residual),
                rat::fmt(&bound)
            )));
        }
        Ok(GModulus {
            m,
            stage: t,
            residual,
            bound,
        })
    }

    fn modulus_stage(&self, m: usize, eps: &Rat) -> Result<usize> {
        self.cubes(m)?;
        if m == 0 {
            return Ok(0);
        }
        let half = eps / rat::int(2);
        let s = self.modulus_stage(m - 1, &half)?;
        let parents: Vec<&ProvenanceCube> = self.levels[m - 1]
            .iter()
            .filter(|pc| pc.stage <= s)
            .collect();
        let n = rat::int(parents.len() as i64);
        let mut t = s;
        for pc in parents {
            let r = source_index(self.dim, m - 1, pc.cube.level, pc.stage);
            let v = self.sources.get(&r).ok_or_else(|| {
                Error::Contract(format!("no provenance for member {r} feeding G_{m}"))
            })?;
            t = t.max(v.modulus(&(&half / &n))?);
        }
        Ok(t)
    }
}
