use num_traits::{One, Signed};

use lipmart::rat::{self, pow2, Rat};
use lipmart::schnorr::{refine_test, PointTest, Target};

use crate::report::{Report, Sink, Table};
use crate::{io_err, CliResult, SchnorrArgs};

pub fn build(a: &SchnorrArgs, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let z = Target::parse(&a.z, a.dim)?;
    let g = refine_test(&PointTest::new(z.clone()), a.levels, a.budget)?;
    let m_max = a.levels;
    report.value("dim", a.dim);
    report.value("levels", m_max);
    report.value("budget", a.budget);
    report.value("partial", g.is_partial());

    let measures = g.measure_violations()?;
    let shown: Vec<String> = measures
        .iter()
        .map(|(m, t, mu)| format!("λG_{{{m},{t}}} = {}", rat::fmt(mu)))
        .collect();
    report.check_none("measure-bound", &shown, "stages with λG_{m,t} > 2^-m");
    let overlaps = g.overlap_violations()?;
    report.check_none("disjoint-cubes", &overlaps, "levels whose cubes overlap");

    let chain = g.target_cubes(&z)?;
    let nested = chain.windows(2).all(|w| w[0].contains_cube(&w[1]));
    report.check(
        "nesting",
        chain.len() == m_max + 1 && nested,
        format!("z ∈ C_{{m+1}} ⊆ C_m along {} levels", chain.len()),
    );

    let mut rows = Vec::new();
    let mut even_bad = Vec::new();
    let mut odd_bad = Vec::new();
    let mut share_bad = Vec::new();
    for (m, c) in chain.iter().enumerate() {
        let mu = g.set(m)?.measure();
        let avg = g.cube_average(c, m_max)?;
        rows.push(vec![
            m.to_string(),
            rat::fmt(&mu),
            c.to_string(),
            rat::fmt(&avg),
        ]);
        if m % 2 == 0 {
            if avg < Rat::one() - pow2(1 - m as i64) {
                even_bad.push(format!("C_{m}: {}", rat::fmt(&avg)));
            }
        } else if avg.abs() > pow2(-(m as i64)) {
            odd_bad.push(format!("C_{m}: {}", rat::fmt(&avg)));
        }
        for i in m..=m_max {
            let share = g.share_in(c, i)?;
            if share > pow2(-(((i - m) * (m + 1)) as i64)) {
                share_bad.push(format!("G_{i} in C_{m}: {}", rat::fmt(&share)));
            }
        }
    }
    report.check_none(
        "even-average",
        &even_bad,
        "even m with average below 1 − 2^(1−m)",
    );
    report.check_none("odd-average", &odd_bad, "odd m with |average| above 2^-m");
    report.check_none(
        "tail-share",
        &share_bad,
        "pairs with λ(G_i ∩ C_m)/λC_m > 2^-((i−m)(m+1))",
    );
    report.note(
        "on C_m the sets G_0 … G_m all contain C_m, so the partial sum there is 1 for even m and 0 for odd m; \
         odd-m averages sit near 0, within 2^-m, not near −1",
    );
    report.note("tail exponent used: λ(G_i ∩ C_m) ≤ 2^-((i−m)(m+1)) λC_m");

    let mut tail_bad = Vec::new();
    for r in 0..=m_max {
        let t = g.tail_l1(r, m_max)?;
        if t > pow2(1 - r as i64) {
            tail_bad.push(format!("r = {r}: {}", rat::fmt(&t)));
        }
    }
    report.check_none(
        "tail-l1",
        &tail_bad,
        "r with ‖Σ_{i≥r} (−1)^i 1_G_i‖₁ > 2^(1−r)",
    );

    if let Some(eps) = &a.eps {
        let mods: Vec<String> = (0..=m_max)
            .map(|m| match g.g_modulus(m, eps) {
                Ok(gm) => format!("{m}:{}", gm.stage),
                Err(e) => format!("{m}:{}", e.code()),
            })
            .collect();
        report.value("moduli", mods);
    }

    let table = Table {
        name: "levels".into(),
        header: ["m", "measure", "C_m", "average"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    let csv: String = std::iter::once("m,average\n".to_string())
        .chain(table.rows.iter().map(|r| format!("{},{}\n", r[0], r[3])))
        .collect();
    sink.write(report, "levels.csv", &table.to_csv())
        .map_err(io_err("levels.csv"))?;
    sink.write(report, "averages.csv", &csv)
        .map_err(io_err("averages.csv"))?;
    for m in 0..=m_max {
        let name = format!("g_{m}.json");
        sink.write(report, &name, &(g.set(m)?.to_json() + "\n"))
            .map_err(io_err(&name))?;
    }
    if a.report {
        report.tables.push(table);
    }
    Ok(())
}
