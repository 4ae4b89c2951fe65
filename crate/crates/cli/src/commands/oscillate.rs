use lipmart::martingale::{cdf_fn, tabulate, MartingaleTable};
use lipmart::oscillator::{
    build_oscillator, cdf_slope_bounds, count_crossings, max_drop, savings_transform,
    strategy_by_name, trace_path, Oscillator, Phase, Savings, StrategyMartingale,
};
use lipmart::piecewise::samples_to_csv;
use lipmart::rat::{self, int};

use crate::report::{Report, Sink, Table};
use crate::{io_err, CliResult, OscillateArgs};

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Up => "up",
        Phase::Down => "down",
    }
}

pub fn run(a: &OscillateArgs, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let m = MartingaleTable::new(tabulate(
        &StrategyMartingale(strategy_by_name(&a.strategy)?),
        a.depth,
    )?)?;
    let saved = savings_transform(&m)?;
    let (drop, at) = max_drop(saved.table());
    report.check(
        "savings-drop",
        drop <= int(1),
        format!(
            "largest drop below a prefix is {} (at {at})",
            rat::fmt(&drop)
        ),
    );
    let table = build_oscillator(&saved, a.depth)?;
    let bad = table.invariant_violations();
    report.check_none(
        "phase-invariants",
        &bad,
        "words breaking up ⇒ B < 3, down ⇒ B > 2 or 1 ≤ B ≤ 4",
    );
    let unfair = table.b.check_fairness();
    report.check(
        "fairness",
        unfair.is_empty(),
        format!("{} unfair words in B", unfair.len()),
    );
    let (lo, hi) = table.range();
    report.rat("table_b_min", &lo);
    report.rat("table_b_max", &hi);

    // the path walk reaches past the table depth
    let osc = Oscillator::from_savings(Savings(StrategyMartingale(strategy_by_name(&a.strategy)?)));
    let trace = trace_path(&osc, &a.target)?;
    report.value("target_length", a.target.len());
    report.value("crossings", trace.crossings());
    let (plo, phi) = trace.range();
    report.rat("path_b_min", &plo);
    report.rat("path_b_max", &phi);
    let shared = a.target.len().min(a.depth);
    let in_table = count_crossings(&table, &a.target.prefix(shared))?;
    let on_path = trace.phases[..=shared]
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    report.check(
        "path-matches-table",
        in_table == on_path,
        format!("{in_table} crossings in the table, {on_path} on the walk, over the first {shared} bits"),
    );
    if !a.target.is_empty() {
        let bounds = cdf_slope_bounds(&osc, &a.target)?;
        report.rat("min_slope", &bounds.min_slope);
        report.rat("max_slope", &bounds.max_slope);
    }
    if a.report {
        let rows = (0..=a.target.len())
            .map(|n| {
                vec![
                    n.to_string(),
                    rat::fmt(&trace.m[n]),
                    rat::fmt(&trace.b[n]),
                    phase_name(trace.phases[n]).to_string(),
                ]
            })
            .collect();
        report.tables.push(Table {
            name: "path".into(),
            header: ["n", "M", "B", "phase"].map(String::from).to_vec(),
            rows,
        });
    }
    let csv = samples_to_csv(&cdf_fn(table.b.table()).sample(a.depth.min(12) as u32)?);
    sink.write(report, "cdf.csv", &csv)
        .map_err(io_err("cdf.csv"))?;
    let path_csv: String = std::iter::once("n,M,B,phase\n".to_string())
        .chain((0..=a.target.len()).map(|n| {
            format!(
                "{n},{},{},{}\n",
                rat::fmt(&trace.m[n]),
                rat::fmt(&trace.b[n]),
                phase_name(trace.phases[n])
            )
        }))
        .collect();
    sink.write(report, "path.csv", &path_csv)
        .map_err(io_err("path.csv"))?;
    Ok(())
}
