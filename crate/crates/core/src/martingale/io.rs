//! JSON-lines table files: one `{"word": "0110", "value": "p/q"}` object per
//! line, with an extra `"stage": s` field in staged files. Blank lines are
//! ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::word::BinWord;

use super::{MartingaleTable, StagedMartingale, TreeTable};

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stage: Option<usize>,
    word: BinWord,
    #[serde(with = "rat::serde_str")]
    value: Rat,
}

fn parse_lines(text: &str) -> Result<Vec<Line>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str::<Line>(l).map_err(|e| Error::Parse {
                what: "martingale line",
                input: l.to_string(),
                reason: format!("line {}, column {}: {e}", n + 1, e.column()),
            })
        })
        .collect()
}

fn entries_map(lines: impl Iterator<Item = Line>) -> Result<BTreeMap<BinWord, Rat>> {
    let mut map = BTreeMap::new();
    for l in lines {
        if map.insert(l.word.clone(), l.value).is_some() {
            return Err(Error::parse(
                "martingale file",
                &l.word.as_string(),
                "duplicate word",
            ));
        }
    }
    Ok(map)
}

/// Reads an unvalidated table; callers choose plain or signed validation.
pub fn read_table_jsonl(text: &str) -> Result<TreeTable> {
    let lines = parse_lines(text)?;
    if lines.is_empty() {
        return Err(Error::parse("martingale file", text, "no entries"));
    }
    TreeTable::from_entries(&entries_map(lines.into_iter())?)
}

pub fn write_table_jsonl(table: &TreeTable) -> String {
    let mut out = String::new();
    for (word, v) in table.entries() {
        let line = Line {
            stage: None,
            word,
            value: v.clone(),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&line).unwrap());
    }
    out
}

/// Reads a staged file; every stage is validated as a fair table and the
/// sequence as monotone.
pub fn read_staged_jsonl(text: &str) -> Result<StagedMartingale> {
    let lines = parse_lines(text)?;
    let mut by_stage: BTreeMap<usize, Vec<Line>> = BTreeMap::new();
    for l in lines {
        let s = l.stage.ok_or_else(|| {
            Error::parse(
                "staged martingale file",
                &l.word.as_string(),
                "missing stage",
            )
        })?;
        by_stage.entry(s).or_default().push(l);
    }
    let count = by_stage.len();
    if by_stage.keys().copied().ne(0..count) {
        return Err(Error::Staging("stage indices must be 0, 1, …, n−1".into()));
    }
    let stages = by_stage
        .into_values()
        .map(|ls| MartingaleTable::new(TreeTable::from_entries(&entries_map(ls.into_iter())?)?))
        .collect::<Result<Vec<_>>>()?;
    StagedMartingale::new(stages)
}

pub fn write_staged_jsonl(sm: &StagedMartingale) -> String {
    let mut out = String::new();
    for (s, stage) in sm.stages().iter().enumerate() {
        for (word, v) in stage.table().entries() {
            let line = Line {
                stage: Some(s),
                word,
                value: v.clone(),
            };
            let _ = writeln!(out, "{}", serde_json::to_string(&line).unwrap());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::int;

    #[test]
    fn reads_table() {
        let text = r#"{"word": "", "value": "1"}
{"word": "0", "value": "2/1"}

{"word": "1", "value": "0/1"}"#;
        let t = read_table_jsonl(text).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(*t.get(&BinWord::parse("0").unwrap()).unwrap(), int(2));
        assert!(MartingaleTable::new(t.clone()).is_ok());
        assert_eq!(read_table_jsonl(&write_table_jsonl(&t)).unwrap(), t);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "{\"word\": \"\", \"value\": \"1\"}\n{\"word\": \"0\", \"value\": \"1/0\"}";
        match read_table_jsonl(text) {
            Err(Error::Parse { reason, .. }) => assert!(reason.starts_with("line 2"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn staged_round_trip() {
        let sm = StagedMartingale::new(vec![
            MartingaleTable::constant(2, int(1)).unwrap(),
            MartingaleTable::constant(2, int(2)).unwrap(),
        ])
        .unwrap();
        let text = write_staged_jsonl(&sm);
        assert!(text.lines().next().unwrap().contains("\"stage\":0"));
        assert_eq!(read_staged_jsonl(&text).unwrap(), sm);
    }

    #[test]
    fn staged_rejects_gap() {
        let text = r#"{"stage": 1, "word": "", "value": "1"}"#;
        assert!(matches!(read_staged_jsonl(text), Err(Error::Staging(_))));
    }
}
