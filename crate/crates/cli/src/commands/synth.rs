use num_traits::{Signed, Zero};

use lipmart::gen;
use lipmart::interval_re::{
    oracle_from_machine, IntervalReOracle, LinearOracle, PrefixFreeMachine, StagedOracle,
};
use lipmart::martingale::{write_staged_jsonl, write_table_jsonl, StagedMartingale};
use lipmart::piecewise::{grid_variation, samples_to_csv};
use lipmart::rat::{self, pow2, Rat};
use lipmart::synthesis::{
    band_enclosure_violations, band_violations, gated_preimage, lipschitz_violations,
    synthesize_signed, variation_preimage, variation_staircase, Preimage, SignedSynthesis,
    StageSchedule, SynthesisOptions, ZigzagSpec,
};
use lipmart::{BinWord, Dyadic, Error, PiecewiseFn};

use super::{load_staged, read, rng};
use crate::report::{Report, Sink};
use crate::{io_err, CliResult, Fact31Args, RuteArgs, StagedArgs, Thm34Args, ZigzagArgs};

fn write_fn(sink: &Sink, report: &mut Report, f: &PiecewiseFn, depth: u32) -> CliResult<()> {
    sink.write(report, "function.json", &(f.to_json() + "\n"))
        .map_err(io_err("function.json"))?;
    let csv = samples_to_csv(&f.sample(depth)?);
    sink.write(report, "samples.csv", &csv)
        .map_err(io_err("samples.csv"))
}

fn slope_bound(f: &PiecewiseFn, c: &Rat, report: &mut Report) {
    let steep: Vec<String> = f
        .segment_slopes()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() > *c)
        .map(|(i, s)| format!("segment {i}: {}", rat::fmt(s)))
        .collect();
    report.check_none(
        "slope-bound",
        &steep,
        &format!("segments steeper than {}", rat::fmt(c)),
    );
}

pub fn zigzag(a: &ZigzagArgs, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let z = ZigzagSpec::new(a.p.clone(), a.q.clone(), a.k)?;
    let f = z.to_fn();
    report.rat("teeth", &z.teeth());
    let var = f.total_variation(&rat::int(1))?;
    report.rat("variation", &var);
    let width = a.q.value() - a.p.value();
    report.check(
        "variation",
        var == width,
        format!("V(W) = {}, q − p = {}", rat::fmt(&var), rat::fmt(&width)),
    );
    slope_bound(&f, &rat::int(1), report);
    let level = a.k + 2;
    let mismatched: Vec<Dyadic> = Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), level)
        .into_iter()
        .filter(|x| f.eval(x.value()).unwrap() != z.eval(x.value()).unwrap())
        .collect();
    report.check_none(
        "tabulation",
        &mismatched,
        &format!("grid points of level {level} off the closed form"),
    );
    write_fn(sink, report, &f, level)
}

pub fn fact31(a: &Fact31Args, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let alphas = &a.alphas.0;
    let g = variation_staircase(alphas)?;
    let depth = a.depth.unwrap_or((alphas.len() as u32).max(12));
    let last = alphas.last().unwrap();
    report.rat("alpha_last", last.value());
    report.value("depth", depth);
    if last.value().is_zero() {
        report.rat("grid_variation", &Rat::zero());
        report.check("grid-variation", true, "α_last = 0 and g = 0");
    } else {
        let var = grid_variation(&g, &Dyadic::zero(), last, depth, &rat::int(1))?;
        report.rat("grid_variation", &var);
        report.check(
            "grid-variation",
            var == *last.value(),
            format!(
                "V(g, 0, α_last) = {}, α_last = {}",
                rat::fmt(&var),
                rat::fmt(last.value())
            ),
        );
    }
    slope_bound(&g, &rat::int(1), report);
    let at_last = g.eval(last.value())?;
    let moving: Vec<Dyadic> = g
        .breakpoints()
        .iter()
        .filter(|b| *b >= last && g.eval(b.value()).unwrap() != at_last)
        .cloned()
        .collect();
    report.check_none(
        "flat-after-last",
        &moving,
        "breakpoints right of α_last where g moves",
    );
    write_fn(sink, report, &g, depth.min(12))
}

fn staged_input(a: &StagedArgs, seed: u64, report: &mut Report) -> CliResult<StagedMartingale> {
    match &a.staged {
        Some(p) => load_staged(p),
        None => {
            report.value("generated_from_seed", seed);
            Ok(gen::staged_martingale(&mut rng(seed), a.depth, a.stages)?)
        }
    }
}

fn schedule_values(res: &SignedSynthesis, report: &mut Report) {
    match &res.schedule {
        StageSchedule::Levels(l) => report.value("boundaries", l.clone()),
        StageSchedule::Gated { k, j } => {
            report.value("gates", k.clone());
            report.value("switch_levels", j.clone());
        }
    }
    report.value("completed_stages", res.completed_stages());
    report.value("partial", res.cap_exceeded);
    let deficits: Vec<String> = res.deficits.iter().map(rat::fmt).collect();
    report.value("deficits", deficits);
}

/// Invariants shared by every signed synthesis run.
fn synthesis_checks(res: &SignedSynthesis, sm: &StagedMartingale, report: &mut Report) {
    let unfair = res.l.check_fairness();
    report.check(
        "fairness",
        unfair.is_empty(),
        format!("{} unfair words in L", unfair.len()),
    );
    let last = sm.stage_count() - 1;
    let table = res.l.table();
    let over: Vec<BinWord> = table
        .entries()
        .filter(|(w, v)| {
            let s = res.stage_of_level[w.len()].min(last);
            v.abs() > *sm.stage(s).get(w).unwrap()
        })
        .map(|(w, _)| w)
        .collect();
    report.check_none("domination", &over, "words with |L(σ)| > M_s(σ)");
    let locks = res.sign_lock_violations(sm);
    report.check_none("sign-lock", &locks, "trace entries breaking the sign rule");
}

fn write_synthesis(res: &SignedSynthesis, sink: &Sink, report: &mut Report) -> CliResult<()> {
    sink.write(report, "signed.jsonl", &write_table_jsonl(res.l.table()))
        .map_err(io_err("signed.jsonl"))?;
    let trace: String = res
        .trace
        .iter()
        .map(|t| serde_json::to_string(t).unwrap() + "\n")
        .collect();
    sink.write(report, "trace.jsonl", &trace)
        .map_err(io_err("trace.jsonl"))
}

pub fn lemma33(a: &StagedArgs, seed: u64, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let sm = staged_input(a, seed, report)?;
    let opts = SynthesisOptions::new(a.depth)
        .with_level_cap(a.cap)
        .with_trace();
    let res = synthesize_signed(&sm, &opts)?;
    schedule_values(&res, report);
    synthesis_checks(&res, &sm, report);
    let gaps: Vec<String> = res
        .deficits
        .iter()
        .enumerate()
        .filter(|(s, d)| d.is_negative() || **d > pow2(-(*s as i64)))
        .map(|(s, d)| format!("stage {s}: {}", rat::fmt(d)))
        .collect();
    report.check_none(
        "stage-gap",
        &gaps,
        "completed stages outside 0 ≤ M_s − V ≤ 2^-s",
    );
    sink.write(report, "staged.jsonl", &write_staged_jsonl(&sm))
        .map_err(io_err("staged.jsonl"))?;
    write_synthesis(&res, sink, report)?;
    let g = lipmart::martingale::cdf_fn(res.l.table());
    write_fn(sink, report, &g, a.depth.min(12) as u32)
}

fn parse_oracle(desc: &str) -> CliResult<Box<dyn IntervalReOracle>> {
    let (kind, arg) = desc.split_once(':').unwrap_or((desc, ""));
    Ok(match kind {
        "linear" => Box::new(LinearOracle {
            c: rat::parse(arg)?,
        }),
        "staged" => Box::new(StagedOracle::new(load_staged(std::path::Path::new(arg))?)),
        "machine" => Box::new(oracle_from_machine(PrefixFreeMachine::from_json(&read(
            std::path::Path::new(arg),
        )?)?)),
        _ => {
            return Err(Error::Parse {
                what: "oracle descriptor",
                input: desc.to_string(),
                reason: "expected linear:<c>, staged:<file> or machine:<file>".into(),
            }
            .into())
        }
    })
}

/// `|V(g, 0, x) − f(x)| ≤ 2^{-s_last}` at every grid point, with the
/// variation accumulated cell by cell.
fn variation_check(
    pre: &Preimage,
    oracle: &dyn IntervalReOracle,
    depth: usize,
    report: &mut Report,
) -> CliResult<()> {
    let completed = pre.synthesis.completed_stages();
    if completed == 0 {
        report.check(
            "variation",
            false,
            "no stage completed within the level cap",
        );
        return Ok(());
    }
    let s_last = completed - 1;
    let tol = pow2(-(s_last as i64));
    let last_stage = pre.staged.stage_count() - 1;
    let grid = Dyadic::grid(&Dyadic::zero(), &Dyadic::one(), depth as u32);
    let vals: Vec<Rat> = grid
        .iter()
        .map(|x| pre.g.eval(x.value()))
        .collect::<Result<_, _>>()?;
    let mut acc = Rat::zero();
    let mut worst = Rat::zero();
    for (i, w) in vals.windows(2).enumerate() {
        acc += (&w[1] - &w[0]).abs();
        let f = oracle.approx(&Dyadic::zero(), &grid[i + 1], last_stage)?;
        worst = rat::max(&worst, &(&acc - f).abs());
    }
    report.rat("variation_residual", &worst);
    report.check(
        "variation",
        worst <= tol,
        format!(
            "max |V(g,0,x) − f(x)| = {} against 2^-{s_last}",
            rat::fmt(&worst)
        ),
    );
    Ok(())
}

pub fn thm34(a: &Thm34Args, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let oracle = parse_oracle(&a.oracle)?;
    let pre = variation_preimage(&*oracle, a.depth, a.cap)?;
    schedule_values(&pre.synthesis, report);
    synthesis_checks(&pre.synthesis, &pre.staged, report);
    match &pre.lipschitz {
        Some(c) => {
            report.rat("lipschitz", c);
            let bad = lipschitz_violations(&pre.synthesis, c);
            report.check_none(
                "lipschitz",
                &bad,
                &format!("leaf slopes above {}", rat::fmt(c)),
            );
        }
        None => {
            report.note("the oracle declares no Lipschitz bound; only the variation is checked")
        }
    }
    variation_check(&pre, &*oracle, a.depth, report)?;
    write_synthesis(&pre.synthesis, sink, report)?;
    write_fn(sink, report, &pre.g, a.depth.min(12) as u32)
}

pub fn rute(a: &RuteArgs, seed: u64, sink: &Sink, report: &mut Report) -> CliResult<()> {
    let sm = staged_input(&a.staged, seed, report)?;
    let pre = gated_preimage(&sm, a.staged.depth, a.depth_cap, a.staged.cap)?;
    schedule_values(&pre.synthesis, report);
    synthesis_checks(&pre.synthesis, &pre.staged, report);
    let bands: Vec<String> = band_violations(&pre.synthesis)
        .into_iter()
        .map(|(w, v)| format!("{w}: {}", rat::fmt(&v)))
        .collect();
    report.check_none("band-bound", &bands, "words with 2^-|σ||L(σ)| > 2^-(s+1)");
    let enclosures: Vec<String> = band_enclosure_violations(&pre.synthesis)
        .into_iter()
        .map(|(s, w)| format!("stage {s} at {w}"))
        .collect();
    report.check_none(
        "band-enclosure",
        &enclosures,
        "sub-bands where |g(a) − g(0.σ)| > 2^-s",
    );
    write_synthesis(&pre.synthesis, sink, report)?;
    write_fn(sink, report, &pre.g, a.staged.depth.min(12) as u32)
}
