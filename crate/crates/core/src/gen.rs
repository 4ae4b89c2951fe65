//! Seeded random instances for property suites and reports.

use rand::Rng;

use crate::dyadic::Dyadic;
use crate::error::Result;
use crate::martingale::{MartingaleTable, StagedMartingale, TreeTable};
use crate::piecewise::PiecewiseFn;
use crate::rat::{self, Rat};
use crate::schnorr::{DyadicCube, DyadicCubeSet};
use crate::word::BinWord;

fn small_ratio<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Rat {
    rat::ratio(rng.gen_range(lo..=hi), den)
}

/// A fair table splitting `M(σ)` as `M(σ)(1 ± a/den)`, `|a| ≤ den`.
pub fn fair_table<R: Rng + ?Sized>(
    rng: &mut R,
    depth: usize,
    root: Rat,
    den: i64,
) -> Result<MartingaleTable> {
    let mut levels = vec![vec![root]];
    for l in 0..depth {
        let next = levels[l]
            .iter()
            .flat_map(|v| {
                let d = v * small_ratio(rng, -den, den, den);
                [v + &d, v - &d]
            })
            .collect();
        levels.push(next);
    }
    MartingaleTable::new(TreeTable::from_levels(levels)?)
}

/// A fair table with every value in `[c, d]`.
pub fn bounded_table<R: Rng + ?Sized>(
    rng: &mut R,
    depth: usize,
    c: &Rat,
    d: &Rat,
    den: i64,
) -> Result<MartingaleTable> {
    let root = c + (d - c) * small_ratio(rng, 0, den, den);
    let mut levels = vec![vec![root]];
    for l in 0..depth {
        let next = levels[l]
            .iter()
            .flat_map(|v| {
                let room = rat::min(&(v - c), &(d - v));
                let step = room * small_ratio(rng, -den, den, den);
                [v + &step, v - &step]
            })
            .collect();
        levels.push(next);
    }
    MartingaleTable::new(TreeTable::from_levels(levels)?)
}

/// `M_0 ≤ M_1 ≤ …`, each stage adding a fair table of root `2^{-s-1}·u`
/// with gentle splits, so every value stays below `M_0(∅) + 1`.
pub fn staged_martingale<R: Rng + ?Sized>(
    rng: &mut R,
    depth: usize,
    stages: usize,
) -> Result<StagedMartingale> {
    let root = small_ratio(rng, 1, 4, 4);
    let mut current = bounded_table(
        rng,
        depth,
        &(&root / rat::int(2)),
        &(&root * rat::ratio(3, 2)),
        4,
    )?;
    let mut out = vec![current.clone()];
    for s in 1..stages {
        let scale = rat::pow2(-(s as i64) - 1);
        let top = &scale * small_ratio(rng, 0, 2, 2);
        let inc = bounded_table(
            rng,
            depth,
            &(&top / rat::int(2)),
            &(&top * rat::ratio(3, 2)),
            4,
        )?;
        let sum = TreeTable::from_fn(depth, |w| current.get(w).unwrap() + inc.get(w).unwrap());
        current = MartingaleTable::new(sum)?;
        out.push(current.clone());
    }
    StagedMartingale::new(out)
}

/// A step function on `count` random dyadic pieces at resolution `2^{-level}`
/// with values `a/den`, `|a| ≤ amp·den`.
pub fn step_fn<R: Rng + ?Sized>(
    rng: &mut R,
    level: u32,
    count: usize,
    amp: i64,
    den: i64,
) -> Result<PiecewiseFn> {
    let n = 1u64 << level;
    let mut cuts: Vec<u64> = (0..count.saturating_sub(1))
        .map(|_| rng.gen_range(1..n))
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bps = vec![Dyadic::zero()];
    bps.extend(cuts.into_iter().map(|c| Dyadic::from_parts(c, level)));
    bps.push(Dyadic::one());
    let values = (1..bps.len())
        .map(|_| small_ratio(rng, -amp * den, amp * den, den))
        .collect();
    PiecewiseFn::step(bps, values)
}

/// A union of up to `count` random cubes of level at most `max_level`.
pub fn cube_set<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    max_level: u32,
    count: usize,
) -> Result<DyadicCubeSet> {
    let cubes = (0..count)
        .map(|_| {
            let level = rng.gen_range(0..=max_level);
            let index = (0..dim).map(|_| rng.gen_range(0..1u64 << level)).collect();
            DyadicCube::new(level, index)
        })
        .collect::<Result<Vec<_>>>()?;
    DyadicCubeSet::from_cubes(dim, &cubes)
}

/// A random word of length `len`.
pub fn word<R: Rng + ?Sized>(rng: &mut R, len: usize) -> BinWord {
    BinWord::from_bits((0..len).map(|_| rng.gen()).collect())
}

/// A rational in `[0, 1]` with denominator `den`.
pub fn unit_rational<R: Rng + ?Sized>(rng: &mut R, den: i64) -> Rat {
    small_ratio(rng, 0, den, den)
}
