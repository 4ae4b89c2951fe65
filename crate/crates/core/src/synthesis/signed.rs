use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::martingale::{MartingaleTable, SignedMartingaleTable, StagedMartingale, TreeTable};
use crate::rat::{pow2, Rat};
use crate::word::BinWord;

pub const DEFAULT_LEVEL_CAP: usize = 24;

/// Level boundaries at which the synthesis moved to the next stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageSchedule {
    /// `ℓ_0 = 0 < ℓ_1 < …`: stage `s` fills levels `ℓ_s + 1 ..= ℓ_{s+1}`.
    Levels(Vec<usize>),
    /// `k_s` per stage and the switch levels `j_s`, with `j_s ≥ k_{s+1}`.
    Gated { k: Vec<usize>, j: Vec<usize> },
}

impl StageSchedule {
    pub fn boundaries(&self) -> &[usize] {
        match self {
            StageSchedule::Levels(l) => l,
            StageSchedule::Gated { j, .. } => j,
        }
    }
}

/// Which branch of the update fired at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// `L(σ) ≥ 0`: the cheaper child gets `+M_s`.
    NonNegative,
    /// `L(σ) < 0`: the cheaper child gets `−M_s`.
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub stage: usize,
    /// The parent word; its children are filled by this step.
    pub word: BinWord,
    /// The child `a` with `M_s(σa) ≤ M_s(σ(1−a))`.
    pub cheaper: u8,
    pub rule: Rule,
    /// `|L(σ)| = M_s(σ)`, so both children are pinned to `±M_s`.
    pub locked: bool,
}

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    /// Deepest level of `L` to build.
    pub depth: usize,
    /// No stage may run past this level without completing.
    pub level_cap: usize,
    pub trace: bool,
}

impl SynthesisOptions {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            level_cap: DEFAULT_LEVEL_CAP,
            trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }

    pub fn with_level_cap(mut self, cap: usize) -> Self {
        self.level_cap = cap;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SignedSynthesis {
    pub l: SignedMartingaleTable,
    pub schedule: StageSchedule,
    /// Stage in force when each level was filled; level 0 is stage 0.
    pub stage_of_level: Vec<usize>,
    /// At the `i`-th completed boundary, `max_σ (M_s(σ) − V_{L,ℓ_{s+1}}(σ))`
    /// over `|σ| = ℓ_s`.
    pub deficits: Vec<Rat>,
    /// Some stage ran into the level cap before the target depth.
    pub cap_exceeded: bool,
    pub trace: Vec<TraceEntry>,
}

impl SignedSynthesis {
    pub fn completed_stages(&self) -> usize {
        self.schedule.boundaries().len() - 1
    }

    /// Replays the trace of a traced run: each entry must match its parent's
    /// sign and, when locked, pin both children to `±M_s`. Returns the
    /// parents where this fails.
    pub fn sign_lock_violations(&self, sm: &StagedMartingale) -> Vec<BinWord> {
        let last = sm.stage_count() - 1;
        let l = self.l.table();
        self.trace
            .iter()
            .filter(|t| {
                let m = sm.stage(t.stage.min(last)).table();
                let Ok(lv) = l.get(&t.word) else { return true };
                let sign_ok = match t.rule {
                    Rule::NonNegative => !lv.is_negative(),
                    Rule::Negative => lv.is_negative(),
                };
                let pinned = !t.locked
                    || [false, true].iter().all(|&b| {
                        let c = t.word.child(b);
                        match (l.get(&c), m.get(&c)) {
                            (Ok(lc), Ok(mc)) if t.rule == Rule::NonNegative => lc == mc,
                            (Ok(lc), Ok(mc)) => *lc == -mc,
                            _ => false,
                        }
                    });
                !(sign_ok && pinned)
            })
            .map(|t| t.word.clone())
            .collect()
    }
}

/// Runs the synthesis with `M_{min(s, last)}` at stage `s`; a stage ends at
/// the first level where every word `σ` at the stage's start level has
/// `M_s(σ) − V_{L,ℓ}(σ) ≤ 2^{-s}`.
pub fn synthesize_signed(
    sm: &StagedMartingale,
    opts: &SynthesisOptions,
) -> Result<SignedSynthesis> {
    let (levels, run) = run(sm, opts, |_| Some(0))?;
    finish(levels, run, StageSchedule::Levels)
}

/// As [`synthesize_signed`], but stage `s` may only end at a level
/// `≥ gates[s + 2]`, and the last stage never ends.
pub fn synthesize_gated(
    sm: &StagedMartingale,
    gates: &[usize],
    opts: &SynthesisOptions,
) -> Result<SignedSynthesis> {
    let count = sm.stage_count();
    if gates.len() != count + 1 {
        return Err(Error::Schedule(format!(
            "{} gates for {count} stages; expected {}",
            gates.len(),
            count + 1
        )));
    }
    let (levels, run) = run(sm, opts, |s| (s + 1 < count).then(|| gates[s + 2]))?;
    let k = gates.to_vec();
    finish(levels, run, |j| StageSchedule::Gated { k, j })
}

struct Run {
    stage_of_level: Vec<usize>,
    boundaries: Vec<usize>,
    deficits: Vec<Rat>,
    cap_exceeded: bool,
    trace: Vec<TraceEntry>,
}

fn finish(
    levels: Vec<Vec<Rat>>,
    run: Run,
    schedule: impl FnOnce(Vec<usize>) -> StageSchedule,
) -> Result<SignedSynthesis> {
    let l = SignedMartingaleTable::new(TreeTable::from_levels(levels)?)
        .map_err(|e| Error::Contract(format!("synthesized table is not fair: {e}")))?;
    Ok(SignedSynthesis {
        l,
        schedule: schedule(run.boundaries),
        stage_of_level: run.stage_of_level,
        deficits: run.deficits,
        cap_exceeded: run.cap_exceeded,
        trace: run.trace,
    })
}

/// `gate(s)` is the least level at which stage `s` may end, or `None` if it
/// never ends.
fn run(
    sm: &StagedMartingale,
    opts: &SynthesisOptions,
    gate: impl Fn(usize) -> Option<usize>,
) -> Result<(Vec<Vec<Rat>>, Run)> {
    if opts.depth > sm.depth() {
        return Err(Error::Parameter(format!(
            "target depth {} exceeds staged table depth {}",
            opts.depth,
            sm.depth()
        )));
    }
    let last = sm.stage_count() - 1;
    let mut levels = vec![vec![Rat::zero()]];
    let mut out = Run {
        stage_of_level: vec![0],
        boundaries: vec![0],
        deficits: Vec::new(),
        cap_exceeded: false,
        trace: Vec::new(),
    };
    let mut s = 0;
    let mut start = 0;
    while levels.len() <= opts.depth {
        let m = sm.stage(s.min(last));
        let next = fill_level(
            &levels[levels.len() - 1],
            m.table(),
            levels.len() - 1,
            s,
            opts.trace.then_some(&mut out.trace),
        );
        levels.push(next);
        out.stage_of_level.push(s);
        let l = levels.len() - 1;
        if let Some(g) = gate(s) {
            if l >= g {
                let deficit = max_deficit(m.table(), &levels[l], start, l);
                if deficit <= pow2(-(s as i64)) {
                    out.boundaries.push(l);
                    out.deficits.push(deficit);
                    s += 1;
                    start = l;
                    continue;
                }
            }
        }
        if gate(s).is_some() && l >= opts.level_cap && l < opts.depth {
            out.cap_exceeded = true;
            break;
        }
    }
    Ok((levels, out))
}

fn fill_level(
    parents: &[Rat],
    m: &TreeTable,
    level: usize,
    stage: usize,
    mut trace: Option<&mut Vec<TraceEntry>>,
) -> Vec<Rat> {
    let mut out = Vec::with_capacity(2 * parents.len());
    for (i, lv) in parents.iter().enumerate() {
        let m0 = m.at(level + 1, 2 * i);
        let m1 = m.at(level + 1, 2 * i + 1);
        let (a, ma) = if m0 <= m1 { (0, m0) } else { (1, m1) };
        let (rule, la, lother) = if !lv.is_negative() {
            (Rule::NonNegative, ma.clone(), lv + lv - ma)
        } else {
            (Rule::Negative, -ma, lv + lv + ma)
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEntry {
                stage,
                word: BinWord::from_index(i as u64, level),
                cheaper: a,
                rule,
                locked: lv.abs() == *m.at(level, i),
            });
        }
        if a == 0 {
            out.push(la);
            out.push(lother);
        } else {
            out.push(lother);
            out.push(la);
        }
    }
    out
}

/// `max_{|σ| = start} (M(σ) − V_{L,level}(σ))`.
fn max_deficit(m: &TreeTable, l_level: &[Rat], start: usize, level: usize) -> Rat {
    let span = 1usize << (level - start);
    let scale = pow2(-((level - start) as i64));
    m.level(start)
        .iter()
        .zip(l_level.chunks(span))
        .map(|(mv, block)| {
            let v: Rat = block.iter().map(Signed::abs).sum();
            mv - v * &scale
        })
        .max()
        .expect("level is nonempty")
}

/// The stages actually used by the gated construction: two zero stages in
/// front unless the first two are already zero.
pub fn with_zero_prefix(sm: &StagedMartingale) -> Result<(StagedMartingale, usize)> {
    let is_zero = |m: &MartingaleTable| m.table().entries().all(|(_, v)| v.is_zero());
    let stages = sm.stages();
    if stages.len() >= 2 && is_zero(&stages[0]) && is_zero(&stages[1]) {
        return Ok((sm.clone(), 0));
    }
    let zero = MartingaleTable::constant(sm.depth(), Rat::zero())?;
    let mut all = vec![zero.clone(), zero];
    all.extend(stages.iter().cloned());
    Ok((StagedMartingale::new(all)?, 2))
}

/// Least `k ≤ cap` such that `2^{-|σ|} M(σ) ≤ 2^{-exponent}` for every word
/// with `k ≤ |σ| ≤ depth(M)`.
pub fn measure_gate(m: &MartingaleTable, exponent: usize, cap: usize) -> Option<usize> {
    let bound = pow2(-(exponent as i64));
    let depth = m.depth();
    let ok = |l: usize| {
        let scale = pow2(-(l as i64));
        m.table().level(l).iter().all(|v| v * &scale <= bound)
    };
    let mut k = None;
    for l in (0..=depth).rev() {
        if !ok(l) {
            break;
        }
        k = Some(l);
    }
    k.filter(|&k| k <= cap)
}

/// The gates `k_0, …, k_S` for stages `M_0, …, M_{S−1}`; `k_S` is taken
/// from the last stage.
pub fn stage_gates(sm: &StagedMartingale, depth_cap: usize) -> Result<Vec<usize>> {
    let count = sm.stage_count();
    (0..=count)
        .map(|s| {
            measure_gate(sm.stage(s.min(count - 1)), s, depth_cap).ok_or(
                Error::NonAtomicWitnessMissing {
                    stage: s,
                    cap: depth_cap.min(sm.depth()),
                },
            )
        })
        .collect()
}

/// Words `σ` violating `2^{-|σ|}|L(σ)| ≤ 2^{-(s+1)}` where `s` is the band
/// `j_s ≤ |σ| < j_{s+1}` containing `|σ|`.
pub fn band_violations(res: &SignedSynthesis) -> Vec<(BinWord, Rat)> {
    let j = res.schedule.boundaries();
    let table = res.l.table();
    let mut out = Vec::new();
    for level in 0..=table.depth() {
        let band = j.iter().rposition(|&b| b <= level).unwrap_or(0);
        let bound = pow2(-(band as i64 + 1));
        let scale = pow2(-(level as i64));
        for (i, v) in table.level(level).iter().enumerate() {
            let w = v.abs() * &scale;
            if w > bound {
                out.push((BinWord::from_index(i as u64, level), w));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn staged(tables: Vec<MartingaleTable>) -> StagedMartingale {
        StagedMartingale::new(tables).unwrap()
    }

    fn w(s: &str) -> BinWord {
        BinWord::parse(s).unwrap()
    }

    #[test]
    fn constant_one() {
        let sm = staged(vec![MartingaleTable::constant(2, int(1)).unwrap()]);
        let res = synthesize_signed(&sm, &SynthesisOptions::new(2).with_trace()).unwrap();
        assert_eq!(*res.l.get(&w("")).unwrap(), int(0));
        assert_eq!(*res.l.get(&w("0")).unwrap(), int(1));
        assert_eq!(*res.l.get(&w("1")).unwrap(), int(-1));
        for x in ["00", "01", "10", "11"] {
            assert_eq!(res.l.get(&w(x)).unwrap().abs(), int(1));
        }
        assert_eq!(res.schedule, StageSchedule::Levels(vec![0, 1, 2]));
        assert!(res.sign_lock_violations(&sm).is_empty());
    }

    #[test]
    fn zero_martingale() {
        let sm = staged(vec![MartingaleTable::constant(4, int(0)).unwrap()]);
        let res = synthesize_signed(&sm, &SynthesisOptions::new(4)).unwrap();
        assert!(res.l.table().entries().all(|(_, v)| v.is_zero()));
        assert!(res.l.check_fairness().is_empty());
    }

    #[test]
    fn level_cap_flags_partial_result() {
        // all capital on 0^n: L stays 0, so stage 1 never gets within 1/2
        let skew = MartingaleTable::from_fn(6, |x| {
            let zeros = x.bits().iter().take_while(|b| !**b).count();
            if zeros == x.len() {
                pow2(x.len() as i64)
            } else {
                Rat::zero()
            }
        })
        .unwrap();
        let sm = staged(vec![skew]);
        let res = synthesize_signed(&sm, &SynthesisOptions::new(6).with_level_cap(3)).unwrap();
        assert!(res.cap_exceeded);
        assert_eq!(res.l.depth(), 3);
    }

    #[test]
    fn gates_examples() {
        let ones = MartingaleTable::constant(8, int(1)).unwrap();
        for s in 0..=5 {
            assert_eq!(measure_gate(&ones, s, 24), Some(s));
        }
        let zero = MartingaleTable::constant(8, int(0)).unwrap();
        assert_eq!(measure_gate(&zero, 7, 24), Some(0));
        let all_in = MartingaleTable::from_fn(8, |x| {
            if x.bits().iter().all(|b| !b) {
                pow2(x.len() as i64)
            } else {
                Rat::zero()
            }
        })
        .unwrap();
        assert_eq!(measure_gate(&all_in, 0, 24), Some(0));
        assert_eq!(measure_gate(&all_in, 1, 24), None);
        let sm = staged(vec![all_in]);
        let (sm, added) = with_zero_prefix(&sm).unwrap();
        assert_eq!(added, 2);
        assert!(matches!(
            stage_gates(&sm, 24),
            Err(Error::NonAtomicWitnessMissing { stage: 2, .. })
        ));
    }

    #[test]
    fn gated_run_respects_bands() {
        let tables = [ratio(1, 2), int(1)]
            .into_iter()
            .map(|c| MartingaleTable::constant(10, c).unwrap())
            .collect();
        let (sm, _) = with_zero_prefix(&staged(tables)).unwrap();
        let gates = stage_gates(&sm, 24).unwrap();
        assert_eq!(gates, vec![0, 0, 1, 3, 4]);
        let res = synthesize_gated(&sm, &gates, &SynthesisOptions::new(10)).unwrap();
        let j = res.schedule.boundaries().to_vec();
        for (s, js) in j.iter().enumerate().skip(1) {
            assert!(
                *js >= gates[s + 1],
                "j_{s} = {js} < k_{} = {}",
                s + 1,
                gates[s + 1]
            );
        }
        assert!(band_violations(&res).is_empty());
        assert!(res.l.check_fairness().is_empty());
    }

    #[test]
    fn ratio_deficit_is_exact() {
        let sm = staged(vec![MartingaleTable::constant(3, ratio(3, 2)).unwrap()]);
        let res = synthesize_signed(&sm, &SynthesisOptions::new(3)).unwrap();
        assert!(res.deficits.iter().all(|d| d.is_zero()));
    }
}
