use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use pulltab::graph::{dot_export, parse_linear, Allocator, Graph};
use pulltab::program::Program;
use pulltab::represented::{represented_set, MAX_IDENTIFIERS};
use pulltab::rewrite::main_graph;
use pulltab::strategy::{run, StrategyConfig, StrategyKind};
use pulltab::verify::Suite;

const EXIT_PROGRAM: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Evaluates functional logic programs by term-graph rewriting.
#[derive(Parser, Debug)]
#[command(name = "pulltab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate `main` (or the expression given with -e) and print its values.
    Eval(EvalArgs),
    /// Parse a program and report LOIS violations.
    Check { file: PathBuf },
    /// Run the randomized verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    file: PathBuf,
    /// Expression in linear notation, e.g. `(,)(flip(x:coin), flip(x))`.
    #[arg(short = 'e', long = "expr", value_name = "EXPR")]
    expr: Option<String>,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    max_steps: usize,
    /// Compute every value (the default).
    #[arg(long, conflicts_with = "first")]
    all: bool,
    /// Stop after K distinct values.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    first: Option<u64>,
    /// Evaluate without the choice-identifier ledger (pulltab only).
    #[arg(long)]
    unsound: bool,
    /// Pull a needed choice without first evaluating an alternative to head normal form.
    #[arg(long)]
    no_hnf_before_pull: bool,
    /// Print every strand's steps to standard error.
    #[arg(long)]
    trace: bool,
    /// Print counters as key=value lines.
    #[arg(long)]
    stats: bool,
    /// Write the entry graph in DOT format.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
    /// Also print the represented set of the entry graph.
    #[arg(long)]
    represented_set: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Backtrack,
    Copy,
    Bubble,
    Pulltab,
}

impl From<StrategyArg> for StrategyKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Backtrack => StrategyKind::Backtrack,
            StrategyArg::Copy => StrategyKind::Copy,
            StrategyArg::Bubble => StrategyKind::Bubble,
            StrategyArg::Pulltab => StrategyKind::PullTab,
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run a single suite; all of them by default.
    #[arg(long, value_enum)]
    lemma: Option<SuiteArg>,
    #[arg(long, value_name = "N", default_value_t = 100)]
    cases: usize,
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    ParallelMoves,
    Pulltab,
    Nonchoice,
    Theorem,
    Corollary,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::ParallelMoves => Suite::ParallelMoves,
            SuiteArg::Pulltab => Suite::PullTab,
            SuiteArg::Nonchoice => Suite::NonChoice,
            SuiteArg::Theorem => Suite::Theorem,
            SuiteArg::Corollary => Suite::Corollary,
        }
    }
}

/// A failure reported on standard error with its exit code.
struct Failure(u8, String);

fn program_error(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_PROGRAM, msg.to_string())
}

fn load(path: &Path, alloc: &Allocator) -> Result<Program, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| program_error(format!("{}: {e}", path.display())))?;
    Program::from_source(&text, alloc)
        .map_err(|e| program_error(format!("{}: {e}", path.display())))
}

fn entry(args: &EvalArgs, p: &Program, alloc: &Allocator) -> Result<Graph, Failure> {
    match &args.expr {
        Some(e) => {
            parse_linear(e, p.signature(), alloc).map_err(|e| program_error(format!("-e: {e}")))
        }
        None => {
            main_graph(p, alloc).ok_or_else(|| program_error("no `main` rule and no -e expression"))
        }
    }
}

fn eval(args: EvalArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let alloc = Allocator::new();
    let p = load(&args.file, &alloc)?;
    let g = entry(&args, &p, &alloc)?;

    let mut cfg = StrategyConfig::new(args.strategy.into())
        .max_steps(args.max_steps)
        .hnf_before_pull(!args.no_hnf_before_pull);
    if let Some(k) = args.first {
        cfg = cfg.max_values(usize::try_from(k).unwrap_or(usize::MAX));
    }
    if args.unsound {
        cfg = cfg.unsound();
    }
    if args.trace {
        cfg = cfg.traced();
    }
    if let Some(path) = &args.dot {
        fs::write(path, dot_export(&g))
            .map_err(|e| program_error(format!("{}: {e}", path.display())))?;
    }

    let outcome = run(&p, &g, &cfg, &alloc).map_err(program_error)?;
    let io = |e: io::Error| program_error(e);
    for line in outcome.values.lines() {
        writeln!(out, "{line}").map_err(io)?;
    }
    if args.trace {
        let mut err = io::stderr().lock();
        for (k, t) in outcome.traces.iter().enumerate() {
            writeln!(err, "-- strand {}", k + 1).map_err(io)?;
            for step in t {
                writeln!(err, "{step}").map_err(io)?;
            }
        }
    }
    if args.represented_set {
        let n = g.choice_ids().len();
        if n > MAX_IDENTIFIERS {
            return Err(program_error(format!(
                "represented set: {n} choice identifiers exceed the limit of {MAX_IDENTIFIERS}"
            )));
        }
        writeln!(out, "-- represented set").map_err(io)?;
        for line in represented_set(&g).lines() {
            writeln!(out, "{line}").map_err(io)?;
        }
    }
    if args.stats {
        writeln!(out, "values={}", outcome.values.len()).map_err(io)?;
        writeln!(out, "failures={}", outcome.failures).map_err(io)?;
        writeln!(out, "exhausted={}", outcome.exhausted).map_err(io)?;
        for (k, v) in outcome.stats.key_values() {
            writeln!(out, "{k}={v}").map_err(io)?;
        }
    }
    if outcome.exhausted {
        eprintln!("step budget of {} exhausted", args.max_steps);
        if args.first.is_none() {
            return Ok(EXIT_EXHAUSTED);
        }
    }
    Ok(0)
}

fn check(file: &Path, out: &mut impl Write) -> Result<u8, Failure> {
    let alloc = Allocator::new();
    let p = load(file, &alloc)?;
    let ops = p.trees().count();
    let rules = p.rules().filter(|r| !r.is_choice_rule()).count();
    writeln!(
        out,
        "{}: LOIS, {ops} operation(s), {rules} rule(s)",
        file.display()
    )
    .map_err(program_error)?;
    Ok(0)
}

fn verify(args: VerifyArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let suites: Vec<Suite> = match args.lemma {
        Some(s) => vec![s.into()],
        None => Suite::ALL.to_vec(),
    };
    let mut ok = true;
    for s in suites {
        let r = s.run(args.cases, args.seed);
        writeln!(out, "{r}").map_err(program_error)?;
        for f in &r.failures {
            writeln!(out, "  failure:\n    {}", f.replace('\n', "\n    "))
                .map_err(program_error)?;
        }
        ok &= r.ok();
    }
    Ok(if ok { 0 } else { EXIT_PROGRAM })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let mut out = io::stdout().lock();
    let res = match cli.command {
        Command::Eval(a) => eval(a, &mut out),
        Command::Check { file } => check(&file, &mut out),
        Command::Verify(a) => verify(a, &mut out),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
