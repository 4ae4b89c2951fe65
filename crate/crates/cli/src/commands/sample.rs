use lipmart::piecewise::samples_to_csv;

use super::load_fn;
use crate::{io_err, CliResult, SampleArgs};

pub fn run(a: &SampleArgs) -> CliResult<()> {
    let f = load_fn(&a.file)?;
    let csv = samples_to_csv(&f.sample(a.depth)?);
    match &a.out {
        Some(p) => std::fs::write(p, csv).map_err(io_err(p.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
