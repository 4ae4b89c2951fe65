use num_traits::Signed;

use crate::error::{Error, Result};
use crate::interval_re::{oracle_to_staged, IntervalReOracle};
use crate::martingale::{cdf_fn, StagedMartingale};
use crate::piecewise::PiecewiseFn;
use crate::rat::{self, pow2, Rat};
use crate::word::BinWord;

use super::signed::{
    stage_gates, synthesize_gated, synthesize_signed, with_zero_prefix, SignedSynthesis,
    SynthesisOptions,
};

/// A function `g = cdf(L)` whose variation on `[0, x]` approximates the
/// target, together with everything used to build it.
#[derive(Clone, Debug)]
pub struct Preimage {
    /// Linear through `g(0.σ) = 2^{-|σ|} Σ_{τ <σ, |τ|=|σ|} L(τ)` at the depth of `L`.
    pub g: PiecewiseFn,
    pub synthesis: SignedSynthesis,
    /// The stages actually fed to the synthesis.
    pub staged: StagedMartingale,
    pub lipschitz: Option<Rat>,
}

/// Variation preimage of a nondecreasing interval-r.e. function given by an
/// oracle; with a declared Lipschitz bound `c`, `g` is `c`-Lipschitz.
pub fn variation_preimage<O: IntervalReOracle + ?Sized>(
    oracle: &O,
    depth: usize,
    level_cap: usize,
) -> Result<Preimage> {
    let staged = oracle_to_staged(oracle, depth, oracle.stage_hint().max(1))?;
    let mut pre = preimage_from_staged(staged, depth, level_cap)?;
    pre.lipschitz = oracle.lipschitz();
    if let Some(c) = &pre.lipschitz {
        if let Some(w) = lipschitz_violations(&pre.synthesis, c).first() {
            return Err(Error::Contract(format!(
                "|L({w})| exceeds the Lipschitz bound {}",
                rat::fmt(c)
            )));
        }
    }
    Ok(pre)
}

pub fn preimage_from_staged(
    staged: StagedMartingale,
    depth: usize,
    level_cap: usize,
) -> Result<Preimage> {
    let opts = SynthesisOptions::new(depth)
        .with_level_cap(level_cap)
        .with_trace();
    let synthesis = synthesize_signed(&staged, &opts)?;
    Ok(Preimage {
        g: cdf_fn(synthesis.l.table()),
        synthesis,
        staged,
        lipschitz: None,
    })
}

/// Gated variation preimage for a staged martingale without a Lipschitz
/// bound. Fails when some stage has no measure gate within `depth_cap`.
pub fn gated_preimage(
    sm: &StagedMartingale,
    depth: usize,
    depth_cap: usize,
    level_cap: usize,
) -> Result<Preimage> {
    let (staged, _) = with_zero_prefix(sm)?;
    let gates = stage_gates(&staged, depth_cap)?;
    let opts = SynthesisOptions::new(depth)
        .with_level_cap(level_cap)
        .with_trace();
    let synthesis = synthesize_gated(&staged, &gates, &opts)?;
    Ok(Preimage {
        g: cdf_fn(synthesis.l.table()),
        synthesis,
        staged,
        lipschitz: None,
    })
}

/// Leaf words with `|L(τ)| > c`. Adjacent grid slopes of `g` are exactly
/// `L(τ)`, so an empty list is the dyadic Lipschitz inequality for every
/// same-level pair.
pub fn lipschitz_violations(res: &SignedSynthesis, c: &Rat) -> Vec<BinWord> {
    let table = res.l.table();
    let depth = table.depth();
    table
        .level(depth)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > *c)
        .map(|(i, _)| BinWord::from_index(i as u64, depth))
        .collect()
}

/// For each switch level `j_s` and word `σ` there, checks
/// `|g(a) − g(0.σ)| ≤ 2^{-s}` at every grid point `a` of `[0.σ, 0.σ + 2^{-j_s}]`.
/// Returns the offending `(s, σ)`.
pub fn band_enclosure_violations(res: &SignedSynthesis) -> Vec<(usize, BinWord)> {
    let table = res.l.table();
    let depth = table.depth();
    let leaves = table.level(depth);
    let mut out = Vec::new();
    for (s, &js) in res.schedule.boundaries().iter().enumerate() {
        if js > depth {
            break;
        }
        let bound = pow2(depth as i64 - s as i64);
        for (i, block) in leaves.chunks(1 << (depth - js)).enumerate() {
            let mut acc = Rat::from_integer(0.into());
            for v in block {
                acc += v;
                if acc.abs() > bound {
                    out.push((s, BinWord::from_index(i as u64, js)));
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Dyadic;
    use crate::interval_re::LinearOracle;
    use crate::martingale::MartingaleTable;
    use crate::piecewise::grid_variation;
    use crate::rat::{int, ratio};
    use num_traits::Zero;

    #[test]
    fn identity_target() {
        let pre = variation_preimage(&LinearOracle { c: int(1) }, 6, 24).unwrap();
        let d = pre.g.resolution();
        assert_eq!(d, 6);
        let v = grid_variation(&pre.g, &Dyadic::zero(), &Dyadic::one(), d, &int(1)).unwrap();
        assert_eq!(v, int(1));
        assert_eq!(pre.g.eval(&int(0)).unwrap(), int(0));
        assert!(lipschitz_violations(&pre.synthesis, &int(1)).is_empty());
    }

    #[test]
    fn zero_target() {
        let pre = variation_preimage(&LinearOracle { c: int(0) }, 4, 24).unwrap();
        assert!(pre.g.values().iter().all(Zero::is_zero));
    }

    #[test]
    fn gated_constant_target() {
        let sm = StagedMartingale::new(vec![
            MartingaleTable::constant(12, ratio(1, 2)).unwrap(),
            MartingaleTable::constant(12, int(1)).unwrap(),
        ])
        .unwrap();
        let pre = gated_preimage(&sm, 12, 24, 24).unwrap();
        assert!(band_enclosure_violations(&pre.synthesis).is_empty());
        let v = grid_variation(&pre.g, &Dyadic::zero(), &Dyadic::one(), 12, &int(1)).unwrap();
        assert!(v <= int(1));
        assert!(int(1) - v <= ratio(1, 8));
    }
}
