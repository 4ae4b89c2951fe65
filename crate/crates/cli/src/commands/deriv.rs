use lipmart::martingale::CdfFn;
use lipmart::oscillator::{strategy_by_name, Oscillator, Savings, StrategyMartingale};
use lipmart::piecewise::{dyadic_deriv_bounds, DerivBounds};
use lipmart::rat;
use lipmart::Error;

use super::{load_fn, load_table};
use crate::report::Report;
use crate::{CliResult, DerivArgs};

pub fn run(a: &DerivArgs, report: &mut Report) -> CliResult<()> {
    let to = a.to.unwrap_or(a.z.len());
    let (source, bounds): (String, DerivBounds) = if let Some(p) = &a.r#fn {
        let f = load_fn(p)?;
        (
            "function".into(),
            dyadic_deriv_bounds(&f, &a.z, a.from, to)?,
        )
    } else if let Some(p) = &a.table {
        let m = load_table(p)?;
        if to > m.depth() {
            return Err(Error::Depth {
                word: a.z.prefix(to.min(a.z.len())),
                depth: m.depth(),
            }
            .into());
        }
        (
            "cdf of table".into(),
            dyadic_deriv_bounds(&CdfFn(&m), &a.z, a.from, to)?,
        )
    } else if let Some(name) = &a.strategy {
        let osc = Oscillator::from_savings(Savings(StrategyMartingale(strategy_by_name(name)?)));
        (
            "cdf of the oscillating martingale".into(),
            dyadic_deriv_bounds(&CdfFn(&osc), &a.z, a.from, to)?,
        )
    } else {
        return Err(Error::Parameter("give one of --fn, --table or --strategy".into()).into());
    };
    report.value("source", source);
    report.value("from", a.from);
    report.value("to", to);
    report.rat("min_slope", &bounds.min_slope);
    report.rat("max_slope", &bounds.max_slope);
    let spread = &bounds.max_slope - &bounds.min_slope;
    report.rat("spread", &spread);
    report.check(
        "ordered",
        bounds.min_slope <= bounds.max_slope,
        format!(
            "min {} ≤ max {}",
            rat::fmt(&bounds.min_slope),
            rat::fmt(&bounds.max_slope)
        ),
    );
    Ok(())
}
