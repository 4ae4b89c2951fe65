//! Martingales on the binary tree: plain, signed and staged tables, the
//! measure and cdf they induce, and the level variation of signed tables.

mod cdf;
mod io;
mod staged;
mod table;

pub use cdf::{cdf_at_dyadic, cdf_at_word, cdf_bounds, cdf_fn, Bounds, CdfFn, Enclosure};
pub use io::{read_staged_jsonl, read_table_jsonl, write_staged_jsonl, write_table_jsonl};
pub use staged::StagedMartingale;
pub use table::{
    check_fairness, FairnessViolation, MartingaleTable, SignedMartingaleTable, TreeTable,
};

use crate::error::Result;
use crate::rat::Rat;
use crate::word::BinWord;

/// A martingale evaluated by walking down the tree. Implementors carry
/// whatever per-node state they need so that a path of length `n` costs
/// `O(n)` steps.
pub trait Martingale {
    type State: Clone;

    fn root(&self) -> Result<(Self::State, Rat)>;

    fn child(&self, parent: &Self::State, bit: bool) -> Result<(Self::State, Rat)>;

    fn value(&self, w: &BinWord) -> Result<Rat> {
        let (mut state, mut v) = self.root()?;
        for &b in w.bits() {
            (state, v) = self.child(&state, b)?;
        }
        Ok(v)
    }

    /// Values at every prefix of `w`, from the empty word to `w` itself.
    fn path(&self, w: &BinWord) -> Result<Vec<Rat>> {
        let (mut state, v) = self.root()?;
        let mut out = Vec::with_capacity(w.len() + 1);
        out.push(v);
        for &b in w.bits() {
            let (s, v) = self.child(&state, b)?;
            state = s;
            out.push(v);
        }
        Ok(out)
    }
}

impl<M: Martingale + ?Sized> Martingale for &M {
    type State = M::State;

    fn root(&self) -> Result<(Self::State, Rat)> {
        (**self).root()
    }

    fn child(&self, parent: &Self::State, bit: bool) -> Result<(Self::State, Rat)> {
        (**self).child(parent, bit)
    }
}

/// Evaluates `m` on every word of length `≤ depth`, returning the values
/// and the walk states level by level.
pub fn tabulate_with_states<M: Martingale>(
    m: &M,
    depth: usize,
) -> Result<(TreeTable, Vec<Vec<M::State>>)> {
    let (s0, v0) = m.root()?;
    let mut values = vec![vec![v0]];
    let mut states = vec![vec![s0]];
    for l in 0..depth {
        let mut vs = Vec::with_capacity(2 << l);
        let mut ss = Vec::with_capacity(2 << l);
        for s in &states[l] {
            for b in [false, true] {
                let (cs, cv) = m.child(s, b)?;
                ss.push(cs);
                vs.push(cv);
            }
        }
        values.push(vs);
        states.push(ss);
    }
    Ok((TreeTable::from_levels(values)?, states))
}

pub fn tabulate<M: Martingale>(m: &M, depth: usize) -> Result<TreeTable> {
    tabulate_with_states(m, depth).map(|(t, _)| t)
}
