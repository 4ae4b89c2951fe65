use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::word::BinWord;

use super::MartingaleTable;

/// A nondecreasing sequence of fair tables `M_0 ≤ M_1 ≤ …` of equal depth,
/// the finite face of a left-r.e. martingale `M = sup_s M_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagedMartingale {
    stages: Vec<MartingaleTable>,
}

impl StagedMartingale {
    pub fn new(stages: Vec<MartingaleTable>) -> Result<Self> {
        let mut out = Self {
            stages: Vec::with_capacity(stages.len()),
        };
        for s in stages {
            out.push(s)?;
        }
        if out.stages.is_empty() {
            return Err(Error::Staging("no stages".into()));
        }
        Ok(out)
    }

    /// Appends a stage, which must dominate the previous one everywhere.
    pub fn push(&mut self, stage: MartingaleTable) -> Result<()> {
        if let Some(prev) = self.stages.last() {
            if prev.depth() != stage.depth() {
                return Err(Error::Staging(format!(
                    "stage {} has depth {}, expected {}",
                    self.stages.len(),
                    stage.depth(),
                    prev.depth()
                )));
            }
            let bad = prev
                .table()
                .entries()
                .zip(stage.table().entries())
                .find(|((_, a), (_, b))| a > b);
            if let Some(((w, a), (_, b))) = bad {
                return Err(Error::Staging(format!(
                    "stage {} decreases at {w}: {} > {}",
                    self.stages.len(),
                    rat::fmt(a),
                    rat::fmt(b)
                )));
            }
        }
        self.stages.push(stage);
        Ok(())
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn depth(&self) -> usize {
        self.stages[0].depth()
    }

    pub fn stage(&self, s: usize) -> &MartingaleTable {
        &self.stages[s]
    }

    pub fn stages(&self) -> &[MartingaleTable] {
        &self.stages
    }

    pub fn last(&self) -> &MartingaleTable {
        self.stages.last().unwrap()
    }

    /// The best available lower approximation to `M(σ)`: the last stage.
    pub fn sup_stages(&self, w: &BinWord) -> Result<Rat> {
        self.last().get(w).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    #[test]
    fn last_stage_wins() {
        let single =
            StagedMartingale::new(vec![MartingaleTable::constant(3, int(1)).unwrap()]).unwrap();
        assert_eq!(
            single.sup_stages(&BinWord::parse("01").unwrap()).unwrap(),
            int(1)
        );

        let stages = [ratio(1, 2), ratio(3, 4), ratio(7, 8)]
            .into_iter()
            .map(|c| MartingaleTable::constant(2, c).unwrap())
            .collect();
        let sm = StagedMartingale::new(stages).unwrap();
        assert_eq!(sm.sup_stages(&BinWord::empty()).unwrap(), ratio(7, 8));
    }

    #[test]
    fn rejects_decreasing_and_mismatched() {
        let a = MartingaleTable::constant(2, int(2)).unwrap();
        let b = MartingaleTable::constant(2, int(1)).unwrap();
        assert!(matches!(
            StagedMartingale::new(vec![a.clone(), b]),
            Err(Error::Staging(_))
        ));
        let c = MartingaleTable::constant(3, int(3)).unwrap();
        assert!(matches!(
            StagedMartingale::new(vec![a, c]),
            Err(Error::Staging(_))
        ));
        assert!(StagedMartingale::new(vec![]).is_err());
    }

    #[test]
    fn appending_is_monotone() {
        let mut sm =
            StagedMartingale::new(vec![MartingaleTable::constant(1, int(1)).unwrap()]).unwrap();
        let w = BinWord::parse("1").unwrap();
        let before = sm.sup_stages(&w).unwrap();
        sm.push(MartingaleTable::constant(1, int(2)).unwrap())
            .unwrap();
        assert!(sm.sup_stages(&w).unwrap() >= before);
    }
}
