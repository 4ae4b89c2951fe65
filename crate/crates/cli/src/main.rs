//! `lipmart`: build, verify and sample the exact dyadic constructions.
//!
//! Exit status is 0 when every reported invariant holds, 1 when one fails,
//! and 2 on a parse or contract error.

mod commands;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lipmart::rat::{self, Rat};
use lipmart::Dyadic;

use report::{Report, Sink};

#[derive(Parser)]
#[command(
    name = "lipmart",
    version,
    about = "Exact dyadic martingales, Lipschitz preimages and Schnorr-test refinements"
)]
struct Cli {
    /// Directory for artifacts (report.json, report.txt and command outputs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print the JSON report instead of the text rendering.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Martingale tables: checks and cdf values.
    #[command(subcommand)]
    Mg(MgCommand),
    /// Variation-realizing constructions.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Oscillating martingale from a betting strategy.
    Oscillate(OscillateArgs),
    /// Schnorr-test refinement.
    #[command(subcommand)]
    Schnorr(SchnorrCommand),
    /// Standalone reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// CSV of a function file at every dyadic of a given level.
    Sample(SampleArgs),
}

#[derive(Subcommand)]
enum MgCommand {
    /// Fairness, measure additivity and cdf identities of a table file.
    Check(MgCheckArgs),
    /// cdf value at a dyadic point, or an enclosure at rationals.
    Cdf(MgCdfArgs),
}

#[derive(Args)]
struct MgCheckArgs {
    /// JSON-lines table; omitted means a random fair table from --seed.
    file: Option<PathBuf>,
    /// Depth of the random table.
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Allow negative values (signed martingale).
    #[arg(long)]
    signed: bool,
    /// Read a staged file and check every stage and their monotonicity.
    #[arg(long)]
    staged: bool,
}

#[derive(Args)]
struct MgCdfArgs {
    file: PathBuf,
    #[arg(long, value_parser = parse_rat)]
    x: Rat,
    /// With y, encloses cdf(y) − cdf(x).
    #[arg(long, value_parser = parse_rat)]
    y: Option<Rat>,
    /// Lower density bound c; defaults to the table minimum.
    #[arg(long, value_parser = parse_rat)]
    c: Option<Rat>,
    /// Upper density bound d; defaults to the table maximum.
    #[arg(long, value_parser = parse_rat)]
    d: Option<Rat>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// A single sawtooth W(p, q; k).
    Zigzag(ZigzagArgs),
    /// Staircase of sawtooths realizing a staged variation.
    Fact31(Fact31Args),
    /// Signed synthesis from a staged martingale.
    Lemma33(StagedArgs),
    /// Lipschitz variation preimage of an oracle.
    Thm34(Thm34Args),
    /// Gated variation preimage without a Lipschitz bound.
    Rute(RuteArgs),
}

#[derive(Args)]
struct ZigzagArgs {
    #[arg(long, value_parser = parse_dyadic)]
    p: Dyadic,
    #[arg(long, value_parser = parse_dyadic)]
    q: Dyadic,
    #[arg(long)]
    k: u32,
}

#[derive(Args)]
struct Fact31Args {
    /// Comma-separated stage values, starting at 0.
    #[arg(long, value_parser = parse_dyadic_list)]
    alphas: DyadicList,
    /// Grid level for the variation check; defaults to max(12, stages).
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Args)]
struct StagedArgs {
    /// Staged JSON-lines file; omitted means a random staged martingale from --seed.
    #[arg(long)]
    staged: Option<PathBuf>,
    /// Stages of the random input.
    #[arg(long, default_value_t = 3)]
    stages: usize,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Level cap for each stage search.
    #[arg(long, default_value_t = 24)]
    cap: usize,
}

#[derive(Args)]
struct Thm34Args {
    /// linear:<c>, staged:<file> or machine:<file>.
    #[arg(long)]
    oracle: String,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    #[arg(long, default_value_t = 24)]
    cap: usize,
}

#[derive(Args)]
struct RuteArgs {
    #[command(flatten)]
    staged: StagedArgs,
    /// Cap on the measure-gate search.
    #[arg(long, default_value_t = 24)]
    depth_cap: usize,
}

#[derive(Args)]
struct OscillateArgs {
    /// constant, double0, double1 or pattern:<bits>.
    #[arg(long)]
    strategy: String,
    /// Target prefix as a bit string.
    #[arg(long, value_parser = parse_word)]
    target: lipmart::BinWord,
    /// Depth of the exhaustive table.
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Include the per-prefix path table in the report.
    #[arg(long)]
    report: bool,
}

#[derive(Subcommand)]
enum SchnorrCommand {
    /// Refine the point test at a target into a nested sequence G_m.
    Build(SchnorrArgs),
}

#[derive(Args)]
struct SchnorrArgs {
    /// Target point: "1/3", "1/3,2/5" or "bits:<interleaved bits>".
    #[arg(long)]
    z: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Build G_0 … G_levels.
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// Stages per enumeration.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Include the per-level table in the text report.
    #[arg(long)]
    report: bool,
    /// Accuracy for the G_m enumeration moduli.
    #[arg(long, value_parser = parse_rat)]
    eps: Option<Rat>,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Slope extremes over the basic dyadic intervals around a target.
    DerivativeBounds(DerivArgs),
}

#[derive(Args)]
struct DerivArgs {
    /// Function file (piecewise JSON or zigzag spec).
    #[arg(long, group = "source")]
    r#fn: Option<PathBuf>,
    /// Martingale table file; the function is its cdf.
    #[arg(long, group = "source")]
    table: Option<PathBuf>,
    /// Strategy name; the function is the cdf of its oscillating martingale.
    #[arg(long, group = "source")]
    strategy: Option<String>,
    #[arg(long, value_parser = parse_word)]
    z: lipmart::BinWord,
    #[arg(long, default_value_t = 1)]
    from: usize,
    /// Defaults to the length of z.
    #[arg(long)]
    to: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    /// Function file (piecewise JSON or zigzag spec).
    file: PathBuf,
    #[arg(long, default_value_t = 12)]
    depth: u32,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct DyadicList(Vec<Dyadic>);

fn parse_rat(s: &str) -> Result<Rat, String> {
    rat::parse(s).map_err(|e| e.to_string())
}

fn parse_dyadic(s: &str) -> Result<Dyadic, String> {
    Dyadic::parse(s).map_err(|e| e.to_string())
}

fn parse_dyadic_list(s: &str) -> Result<DyadicList, String> {
    s.split(',')
        .map(parse_dyadic)
        .collect::<Result<_, _>>()
        .map(DyadicList)
}

fn parse_word(s: &str) -> Result<lipmart::BinWord, String> {
    lipmart::BinWord::parse(s).map_err(|e| e.to_string())
}

/// Library and file errors; both exit with status 2.
#[derive(Debug)]
pub enum CliError {
    Lib(lipmart::Error),
    Io(String, std::io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.code(),
            CliError::Io(..) => "io.file",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
        }
    }
}

impl From<lipmart::Error> for CliError {
    fn from(e: lipmart::Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: impl fmt::Display) -> impl FnOnce(std::io::Error) -> CliError {
    let p = path.to_string();
    move |e| CliError::Io(p, e)
}

fn echo() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    args.join(" ")
}

fn dispatch(cli: &Cli, sink: &Sink, report: &mut Report) -> CliResult<()> {
    use commands::*;
    match &cli.command {
        Command::Mg(MgCommand::Check(a)) => mg::check(a, cli.seed, sink, report),
        Command::Mg(MgCommand::Cdf(a)) => mg::cdf(a, report),
        Command::Synth(SynthCommand::Zigzag(a)) => synth::zigzag(a, sink, report),
        Command::Synth(SynthCommand::Fact31(a)) => synth::fact31(a, sink, report),
        Command::Synth(SynthCommand::Lemma33(a)) => synth::lemma33(a, cli.seed, sink, report),
        Command::Synth(SynthCommand::Thm34(a)) => synth::thm34(a, sink, report),
        Command::Synth(SynthCommand::Rute(a)) => synth::rute(a, cli.seed, sink, report),
        Command::Oscillate(a) => oscillate::run(a, sink, report),
        Command::Schnorr(SchnorrCommand::Build(a)) => schnorr::build(a, sink, report),
        Command::Report(ReportCommand::DerivativeBounds(a)) => deriv::run(a, report),
        Command::Sample(_) => unreachable!("sample writes CSV directly"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Sample(a) = &cli.command {
        return match commands::sample::run(a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error[{}]: {e}", e.code());
                ExitCode::from(2)
            }
        };
    }
    let started = Instant::now();
    let mut report = Report::new(echo());
    let outcome = Sink::new(cli.out_dir.clone())
        .map_err(io_err(
            cli.out_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        ))
        .and_then(|sink| {
            dispatch(&cli, &sink, &mut report)?;
            // the written report leaves out timing so reruns are byte-identical
            if sink.enabled() {
                let dir = sink.dir().unwrap().to_path_buf();
                report
                    .artifacts
                    .push(dir.join("report.json").display().to_string());
                report
                    .artifacts
                    .push(dir.join("report.txt").display().to_string());
                let json = report.to_json(None);
                let text = report.to_text(None);
                std::fs::write(dir.join("report.json"), json).map_err(io_err("report.json"))?;
                std::fs::write(dir.join("report.txt"), text).map_err(io_err("report.txt"))?;
            }
            Ok(())
        });
    if let Err(e) = outcome {
        eprintln!("error[{}]: {e}", e.code());
        return ExitCode::from(2);
    }
    let elapsed = Some(started.elapsed());
    if cli.json {
        print!("{}", report.to_json(elapsed));
    } else {
        print!("{}", report.to_text(elapsed));
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
