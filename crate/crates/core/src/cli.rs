//! The `itt` command line: `check`, `reduce` and `corpus`.
//!
//! Exit codes: 0 success, 1 parse or type error (or a failed corpus run),
//! 2 usage error or unreadable input, 3 fuel exhausted, 4 a cycle was
//! detected (taking precedence over 3), 70 internal error.

use std::io::{self, Read, Write};
use std::panic::{self, AssertUnwindSafe};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::convert::RuleSet;
use crate::corpus::{load_example, run_all, run_case, RuleOverrides};
use crate::parser::parse_program;
use crate::reduce::Strategy;
use crate::syntax::pretty;
use crate::trace::Status;
use crate::typecheck::{elaborate, ElabOptions, PragmaOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FUEL: i32 = 3;
pub const EXIT_CYCLE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 70;

/// Environment variable holding the default step budget.
pub const MAX_STEPS_ENV: &str = "ITT_MAX_STEPS";

#[derive(Parser, Debug)]
#[command(name = "itt", version, about = "Type check and reduce programs in a small dependent type theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Elaborate a file and print the type of every `#check`.
    Check {
        /// Input file, or `-` for standard input.
        file: String,
        #[command(flatten)]
        rules: RuleFlags,
    },
    /// Elaborate a file and run every `#reduce`.
    Reduce {
        /// Input file, or `-` for standard input.
        file: String,
        /// Strategy for pragmas that do not name one.
        #[arg(long, default_value = "nf", value_parser = |s: &str| s.parse::<Strategy>())]
        strategy: Strategy,
        #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
        trace: TraceFormat,
        #[command(flatten)]
        rules: RuleFlags,
    },
    /// Run the embedded examples against their recorded outcomes.
    Corpus {
        /// Run a single example.
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        rules: RuleFlags,
    },
}

#[derive(Args, Debug)]
struct RuleFlags {
    /// Step budget per declaration (overrides ITT_MAX_STEPS).
    #[arg(long, value_name = "N")]
    max_steps: Option<u64>,
    #[arg(long)]
    no_cast_rule: bool,
    #[arg(long)]
    no_eqrec_rule: bool,
    #[arg(long)]
    enable_j: bool,
    #[arg(long)]
    no_proof_irrelevance: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
    Off,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid {MAX_STEPS_ENV} value `{0}`")]
struct BadEnv(String);

impl RuleFlags {
    fn fuel(&self, env_fuel: Option<&str>) -> Result<Option<u64>, BadEnv> {
        if self.max_steps.is_some() {
            return Ok(self.max_steps);
        }
        env_fuel.map(|v| v.trim().parse().map_err(|_| BadEnv(v.to_owned()))).transpose()
    }

    fn overrides(&self, fuel: Option<u64>) -> RuleOverrides {
        RuleOverrides {
            cast_rule: self.no_cast_rule.then_some(false),
            eqrec_rule: self.no_eqrec_rule.then_some(false),
            j_rule: self.enable_j.then_some(true),
            proof_irrelevance: self.no_proof_irrelevance.then_some(false),
            fuel,
        }
    }
}

/// Streams and environment for one invocation.
pub struct Io<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    /// Value of `ITT_MAX_STEPS`, if set.
    pub max_steps_env: Option<String>,
}

/// Runs the command line with the process's streams, turning panics into
/// exit code 70. `argv[0]` is the program name.
pub fn run(argv: &[String]) -> i32 {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut io = Io {
        stdin: &mut stdin.lock(),
        stdout: &mut stdout.lock(),
        stderr: &mut stderr.lock(),
        max_steps_env: std::env::var(MAX_STEPS_ENV).ok(),
    };
    run_with(argv, &mut io)
}

pub fn run_with(argv: &[String], io: &mut Io<'_>) -> i32 {
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let result = panic::catch_unwind(AssertUnwindSafe(|| dispatch(argv, io)));
    panic::set_hook(hook);
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            let _ = writeln!(io.stderr, "itt: output error: {e}");
            EXIT_INTERNAL
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            let _ = writeln!(io.stderr, "itt: internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

fn dispatch(argv: &[String], io: &mut Io<'_>) -> io::Result<i32> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                write!(io.stderr, "{text}")?;
            } else {
                write!(io.stdout, "{text}")?;
            }
            return Ok(code);
        }
    };
    let flags = match &cli.command {
        Command::Check { rules, .. } | Command::Reduce { rules, .. } | Command::Corpus { rules, .. } => rules,
    };
    let fuel = match flags.fuel(io.max_steps_env.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            writeln!(io.stderr, "itt: {e}")?;
            return Ok(EXIT_USAGE);
        }
    };
    let overrides = flags.overrides(fuel);
    match &cli.command {
        Command::Check { file, .. } => check(file, overrides.apply(RuleSet::default()), io),
        Command::Reduce { file, strategy, trace, .. } => {
            reduce(file, overrides.apply(RuleSet::default()), *strategy, *trace, io)
        }
        Command::Corpus { case, .. } => corpus(case.as_deref(), &overrides, io),
    }
}

fn read_input(file: &str, io: &mut Io<'_>) -> io::Result<Option<String>> {
    let mut text = String::new();
    let read = if file == "-" {
        io.stdin.read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(file).map(|t| text = t)
    };
    match read {
        Ok(()) => Ok(Some(text)),
        Err(e) => {
            writeln!(io.stderr, "itt: cannot read `{file}`: {e}")?;
            Ok(None)
        }
    }
}

/// Parses and elaborates, reporting failures. `Err(code)` means stop.
fn load(
    file: &str,
    options: &ElabOptions,
    io: &mut Io<'_>,
) -> io::Result<Result<Vec<PragmaOutcome>, i32>> {
    let Some(src) = read_input(file, io)? else {
        return Ok(Err(EXIT_USAGE));
    };
    let program = match parse_program(&src) {
        Ok(p) => p,
        Err(e) => {
            writeln!(io.stderr, "{file}:{e}")?;
            return Ok(Err(EXIT_ERROR));
        }
    };
    match elaborate(&program, options) {
        Ok(elab) => Ok(Ok(elab.outcomes)),
        Err(e) => {
            writeln!(io.stderr, "{file}: {e}")?;
            Ok(Err(if e.fuel().is_some() { EXIT_FUEL } else { EXIT_ERROR }))
        }
    }
}

fn print_check(outcome: &PragmaOutcome, out: &mut dyn Write) -> io::Result<()> {
    let names = outcome.names();
    writeln!(out, "{} : {}", pretty(outcome.term(), &names), pretty(outcome.ty(), &names))
}

fn check(file: &str, rules: RuleSet, io: &mut Io<'_>) -> io::Result<i32> {
    let options = ElabOptions { rules, run_reductions: false, ..ElabOptions::default() };
    let outcomes = match load(file, &options, io)? {
        Ok(o) => o,
        Err(code) => return Ok(code),
    };
    for o in outcomes.iter().filter(|o| matches!(o, PragmaOutcome::Check { .. })) {
        print_check(o, io.stdout)?;
    }
    Ok(EXIT_OK)
}

fn reduce(file: &str, rules: RuleSet, strategy: Strategy, format: TraceFormat, io: &mut Io<'_>) -> io::Result<i32> {
    let options = ElabOptions { rules, strategy, run_reductions: true };
    let outcomes = match load(file, &options, io)? {
        Ok(o) => o,
        Err(code) => return Ok(code),
    };
    let (mut cycle, mut fuel) = (false, false);
    for o in &outcomes {
        let PragmaOutcome::Reduce { term, ctx, trace: Some(trace), .. } = o else {
            if format != TraceFormat::Json {
                print_check(o, io.stdout)?;
            }
            continue;
        };
        cycle |= matches!(trace.status, Status::CycleDetected(_));
        fuel |= trace.status == Status::FuelExhausted;
        match format {
            TraceFormat::Json => {
                for line in trace.to_json_lines(Some(o.decl())) {
                    writeln!(io.stdout, "{line}")?;
                }
            }
            TraceFormat::Text => {
                writeln!(io.stdout, "-- #reduce [{}] {}", trace.strategy, pretty(term, &ctx.names()))?;
                write!(io.stdout, "{}", trace.to_text())?;
            }
            TraceFormat::Off => {
                writeln!(io.stdout, "-- #reduce [{}] {}", trace.strategy, pretty(term, &ctx.names()))?;
                writeln!(io.stdout, "STATUS {}", trace.status)?;
            }
        }
    }
    Ok(if cycle {
        EXIT_CYCLE
    } else if fuel {
        EXIT_FUEL
    } else {
        EXIT_OK
    })
}

fn corpus(case: Option<&str>, overrides: &RuleOverrides, io: &mut Io<'_>) -> io::Result<i32> {
    let report = match case {
        None => run_all(overrides),
        Some(name) => match load_example(name) {
            Ok(c) => run_case(&c, overrides),
            Err(e) => {
                writeln!(io.stderr, "itt: {e}")?;
                return Ok(EXIT_USAGE);
            }
        },
    };
    write!(io.stdout, "{}", report.to_text())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_ERROR })
}
