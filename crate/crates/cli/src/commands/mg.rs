use num_traits::{One, Signed, Zero};

use lipmart::gen;
use lipmart::martingale::{
    cdf_at_dyadic, cdf_bounds, cdf_fn, read_table_jsonl, write_staged_jsonl, write_table_jsonl,
    Bounds, MartingaleTable, SignedMartingaleTable, TreeTable,
};
use lipmart::piecewise::{samples_to_csv, slope};
use lipmart::rat::{self, pow2, Rat};
use lipmart::{BinWord, Dyadic};

use super::{load_staged, load_table, read, rng};
use crate::report::{Report, Sink};
use crate::{io_err, CliResult, MgCdfArgs, MgCheckArgs};

pub fn check(a: &MgCheckArgs, seed: u64, sink: &Sink, report: &mut Report) -> CliResult<()> {
    if a.staged {
        return check_staged(a, sink, report);
    }
    let table = match &a.file {
        Some(p) => read_table_jsonl(&read(p)?)?,
        None => {
            report.value("generated_from_seed", seed);
            gen::fair_table(&mut rng(seed), a.depth, rat::int(1), 4)?.into_table()
        }
    };
    report.value("depth", table.depth());
    report.rat("root", table.at(0, 0));
    table_checks(&table, a.signed, report);
    if a.signed {
        if let Ok(l) = SignedMartingaleTable::new(table.clone()) {
            let grows: Vec<BinWord> = BinWord::level(0)
                .chain(BinWord::level(1.min(table.depth())))
                .filter(|w| {
                    (w.len()..table.depth()).any(|b| {
                        l.level_variation(w, b).unwrap() > l.level_variation(w, b + 1).unwrap()
                    })
                })
                .collect();
            report.check_none(
                "level-variation-monotone",
                &grows,
                "words where V_{L,b} decreases in b",
            );
        }
    }
    sink.write(report, "table.jsonl", &write_table_jsonl(&table))
        .map_err(io_err("table.jsonl"))?;
    let depth = table.depth().min(12) as u32;
    let csv = samples_to_csv(&cdf_fn(&table).sample(depth)?);
    sink.write(report, "cdf.csv", &csv)
        .map_err(io_err("cdf.csv"))?;
    Ok(())
}

fn table_checks(table: &TreeTable, signed: bool, report: &mut Report) {
    let unfair = table.fairness_violations();
    let worst = unfair.iter().map(|v| v.residual.abs()).max();
    let detail = match &worst {
        None => "every parent is the mean of its children".to_string(),
        Some(r) => format!(
            "{} unfair words, worst residual {}",
            unfair.len(),
            rat::fmt(r)
        ),
    };
    report.check("fairness", unfair.is_empty(), detail);
    if !signed {
        let negative: Vec<BinWord> = table
            .entries()
            .filter(|(_, v)| v.is_negative())
            .map(|(w, _)| w)
            .collect();
        report.check_none("nonnegative", &negative, "negative values");
    }
    let (lo, hi) = table.entries().fold(
        (table.at(0, 0).clone(), table.at(0, 0).clone()),
        |(lo, hi), (_, v)| (rat::min(&lo, v), rat::max(&hi, v)),
    );
    report.rat("min", &lo);
    report.rat("max", &hi);

    let depth = table.depth();
    let mu = |w: &BinWord| table.get(w).unwrap() * pow2(-(w.len() as i64));
    let nonadditive: Vec<BinWord> = (0..depth)
        .flat_map(BinWord::level)
        .filter(|w| mu(w) != mu(&w.child(false)) + mu(&w.child(true)))
        .collect();
    report.check_none(
        "measure-additivity",
        &nonadditive,
        "words with μ(σ) ≠ μ(σ0) + μ(σ1)",
    );

    let f = cdf_fn(table);
    let total = f.eval(&Rat::one()).unwrap();
    report.check(
        "cdf-total",
        total == *table.at(0, 0),
        format!(
            "cdf(1) = {}, M(∅) = {}",
            rat::fmt(&total),
            rat::fmt(table.at(0, 0))
        ),
    );
    let off: Vec<BinWord> = (0..=depth)
        .flat_map(BinWord::level)
        .filter(|w| slope(&f, &w.left_end(), &w.right_end()).unwrap() != *table.get(w).unwrap())
        .collect();
    report.check_none(
        "dyadic-slopes",
        &off,
        "words where the cdf slope differs from M(σ)",
    );
}

fn check_staged(a: &MgCheckArgs, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let path = a
        .file
        .as_ref()
        .ok_or_else(|| lipmart::Error::Parameter("--staged needs a file".into()))?;
    let sm = load_staged(path)?;
    report.value("stages", sm.stage_count());
    report.value("depth", sm.depth());
    for (s, m) in sm.stages().iter().enumerate() {
        let unfair = m.check_fairness();
        report.check(
            &format!("stage-{s}-fairness"),
            unfair.is_empty(),
            format!("{} unfair words", unfair.len()),
        );
    }
    let drops: Vec<String> = sm
        .stages()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            w[0].table()
                .entries()
                .any(|(word, v)| v > w[1].get(&word).unwrap())
        })
        .map(|(s, _)| format!("{s}→{}", s + 1))
        .collect();
    report.check_none(
        "stages-nondecreasing",
        &drops,
        "stage pairs with a decrease",
    );
    sink.write(report, "staged.jsonl", &write_staged_jsonl(&sm))
        .map_err(io_err("staged.jsonl"))?;
    Ok(())
}

pub fn cdf(a: &MgCdfArgs, report: &mut Report) -> CliResult<()> {
    let m: MartingaleTable = load_table(&a.file)?;
    let (lo, hi) = m.min_max();
    let bounds = Bounds::new(a.c.clone().unwrap_or(lo), a.d.clone().unwrap_or(hi))?;
    bounds.check(&m)?;
    report.rat("c", &bounds.c);
    report.rat("d", &bounds.d);
    let (x, y) = match &a.y {
        Some(y) => (a.x.clone(), y.clone()),
        None => (Rat::zero(), a.x.clone()),
    };
    report.rat("x", &x);
    report.rat("y", &y);
    let exact = match (Dyadic::new(x.clone()), Dyadic::new(y.clone())) {
        // exact only where the table resolves both points
        (Ok(dx), Ok(dy))
            if dx.in_unit() && dy.in_unit() && dx.level().max(dy.level()) as usize <= m.depth() =>
        {
            Some(cdf_at_dyadic(&m, &dy)? - cdf_at_dyadic(&m, &dx)?)
        }
        _ => None,
    };
    if x == y {
        report.rat("difference", &Rat::zero());
        return Ok(());
    }
    let enc = cdf_bounds(&m, &bounds, &x, &y)?;
    report.rat("lower", &enc.lo);
    report.rat("upper", &enc.hi);
    report.rat("width", &enc.width());
    let floor = &bounds.c * (&y - &x);
    let ceil = &bounds.d * (&y - &x);
    report.check(
        "enclosure-within-density-bounds",
        enc.is_within(&floor, &ceil) && enc.lo <= enc.hi,
        format!(
            "[{}, {}] inside [c(y−x), d(y−x)]",
            rat::fmt(&enc.lo),
            rat::fmt(&enc.hi)
        ),
    );
    if let Some(v) = exact {
        report.rat("difference", &v);
        report.check(
            "enclosure-contains-exact",
            enc.contains(&v),
            format!("exact difference {}", rat::fmt(&v)),
        );
    }
    Ok(())
}
