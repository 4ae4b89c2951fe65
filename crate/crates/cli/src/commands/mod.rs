//! One module per command group; shared file loading lives here.

pub mod deriv;
pub mod mg;
pub mod oscillate;
pub mod sample;
pub mod schnorr;
pub mod synth;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lipmart::martingale::{read_staged_jsonl, read_table_jsonl, MartingaleTable, StagedMartingale};
use lipmart::synthesis::ZigzagSpec;
use lipmart::{Error, PiecewiseFn};

use crate::{io_err, CliResult};

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(io_err(path.display()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A table file, rejected unless fair and nonnegative.
pub fn load_table(path: &Path) -> CliResult<MartingaleTable> {
    let text = read(path)?;
    Ok(MartingaleTable::new(read_table_jsonl(&text)?)?)
}

pub fn load_staged(path: &Path) -> CliResult<StagedMartingale> {
    Ok(read_staged_jsonl(&read(path)?)?)
}

/// A piecewise function file, or a zigzag spec `{"p", "q", "k"}`.
pub fn load_fn(path: &Path) -> CliResult<PiecewiseFn> {
    let text = read(path)?;
    if text.trim().is_empty() {
        return Err(Error::Parse {
            what: "function file",
            input: path.display().to_string(),
            reason: "file is empty".into(),
        }
        .into());
    }
    match PiecewiseFn::from_json(&text) {
        Ok(f) => Ok(f),
        Err(first) => match serde_json::from_str::<ZigzagSpec>(&text) {
            Ok(z) => Ok(ZigzagSpec::new(z.p, z.q, z.k)?.to_fn()),
            Err(_) => Err(first.into()),
        },
    }
}
