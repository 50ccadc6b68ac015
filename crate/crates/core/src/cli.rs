//! Command-line front end.
//!
//! Each subcommand is a function over explicit output sinks returning an
//! [`ExitStatus`]; the `aims` binary only forwards `std::env::args` and the
//! standard streams to [`run`]. Diagnostics go to the error sink as one line
//! of JSON with at least `error` and `kind`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analytics::{check_report, valuation_report};
use crate::error::Error;
use crate::ledger::{read_jsonl, replay, write_jsonl};
use crate::pricing::PriceFunction;
use crate::scenario::{self, Scenario};
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// Bad arguments, unreadable or invalid input.
    ValidationFailure,
    /// A ledger, log or valuation invariant does not hold.
    InvariantViolation,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ValidationFailure => 1,
            ExitStatus::InvariantViolation => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aims", version, about = "Time-priced token ledger: prices, simulations, log verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price at one time, or a CSV series.
    Price(PriceArgs),
    /// Run a scenario and write its artifacts.
    Simulate(SimulateArgs),
    /// Replay an event log and check every invariant.
    Verify(VerifyArgs),
}

#[derive(Clone, Debug, Default, Args)]
pub struct PriceArgs {
    /// Price function JSON; the built-in WISH curve when absent.
    #[arg(long, env = "AIMS_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "series", required_unless_present = "series")]
    pub at: Option<String>,
    #[arg(long)]
    pub series: bool,
    /// Defaults to the curve start.
    #[arg(long, requires = "series")]
    pub from: Option<String>,
    /// Defaults to the curve end.
    #[arg(long, requires = "series")]
    pub to: Option<String>,
    /// Days between rows. Defaults to 1.
    #[arg(long, requires = "series")]
    pub step: Option<u64>,
    /// Aligned text instead of CSV.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Clone, Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, env = "AIMS_CONFIG")]
    pub config: Option<PathBuf>,
}

struct Failure {
    status: ExitStatus,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut body = json!({ "error": e.to_string(), "kind": e.kind() });
        let status = match &e {
            Error::Invariant { invariant, .. } => {
                body["invariant"] = json!(invariant);
                ExitStatus::InvariantViolation
            }
            Error::MalformedLog { seq, truncated, .. } => {
                body["seq"] = json!(seq);
                if *truncated {
                    ExitStatus::ValidationFailure
                } else {
                    body["invariant"] = json!("log integrity");
                    ExitStatus::InvariantViolation
                }
            }
            Error::Schema { path, .. } => {
                body["path"] = json!(path);
                ExitStatus::ValidationFailure
            }
            Error::Action { index, .. } => {
                body["action"] = json!(index);
                ExitStatus::ValidationFailure
            }
            _ => ExitStatus::ValidationFailure,
        };
        Failure { status, body }
    }
}

impl Failure {
    fn io(path: &Path, e: &io::Error) -> Self {
        Failure {
            status: ExitStatus::ValidationFailure,
            body: json!({ "error": format!("{}: {e}", path.display()), "kind": "IoError" }),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: ExitStatus::ValidationFailure,
            body: json!({ "error": message.into(), "kind": "UsageError" }),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn finish(outcome: Outcome, err: &mut dyn Write) -> ExitStatus {
    match outcome {
        Ok(()) => ExitStatus::Success,
        Err(f) => {
            let _ = writeln!(err, "{}", f.body);
            f.status
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(Path::new("<stdout>"), &e))
}

fn read_file(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, &e))
}

fn load_price_function(path: Option<&Path>) -> std::result::Result<PriceFunction, Failure> {
    match path {
        None => Ok(PriceFunction::wish()),
        Some(p) => {
            let bytes = read_file(p)?;
            let text = std::str::from_utf8(&bytes)
                .map_err(|_| Failure::from(Error::InvalidPriceFunction("config is not UTF-8".into())))?;
            Ok(PriceFunction::from_json(text)?)
        }
    }
}

fn timestamp(s: &str) -> std::result::Result<Timestamp, Failure> {
    Ok(s.parse::<Timestamp>()?)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{}", e.render());
            return ExitStatus::Success;
        }
        Err(e) => {
            let text = e.to_string();
            let message = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
                .trim_start_matches("error: ")
                .to_string();
            return finish(Err(Failure::usage(message)), err);
        }
    };
    match &cli.command {
        Command::Price(a) => price(a, out, err),
        Command::Simulate(a) => simulate(a, out, err),
        Command::Verify(a) => verify(a, out, err),
    }
}

pub fn price(args: &PriceArgs, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    finish(price_inner(args, out), err)
}

fn price_inner(args: &PriceArgs, out: &mut dyn Write) -> Outcome {
    let pf = load_price_function(args.config.as_deref())?;
    if !args.series {
        let at = match &args.at {
            Some(s) => timestamp(s)?,
            None => return Err(Failure::usage("either --at or --series is required")),
        };
        let p = pf.price_at(at)?;
        let line = if args.pretty { format!("{at}  {p}\n") } else { format!("{p}\n") };
        return emit(out, &line);
    }
    let from = args.from.as_deref().map(timestamp).transpose()?.unwrap_or(pf.start());
    let to = args.to.as_deref().map(timestamp).transpose()?.unwrap_or(pf.end());
    let step = args.step.unwrap_or(1);
    if step == 0 {
        return Err(Failure::usage("--step must be at least 1"));
    }
    if to < from {
        return Err(Failure::usage(format!("--to {to} precedes --from {from}")));
    }
    let mut text = String::from(if args.pretty {
        "timestamp             price\n"
    } else {
        "timestamp,price\n"
    });
    let mut t = from;
    while t <= to {
        let p = pf.price_at(t)?;
        if args.pretty {
            text.push_str(&format!("{:<22}{p}\n", t.to_string()));
        } else {
            text.push_str(&format!("{t},{p}\n"));
        }
        t = match t.plus_days(step) {
            Ok(next) => next,
            Err(_) => break,
        };
    }
    emit(out, &text)
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    finish(simulate_inner(args, out), err)
}

fn simulate_inner(args: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let bytes = read_file(&args.scenario)?;
    let mut sc = Scenario::from_json(&bytes)?;
    if args.seed.is_some() {
        sc.seed = args.seed;
    }
    let run = scenario::run(&sc)?;
    let report = valuation_report(&run.ledger, sc.horizon)?;
    let digest = run.ledger.state_digest();

    fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, &e))?;
    let write = |name: &str, data: &[u8]| -> Outcome {
        let path = args.out.join(name);
        fs::write(&path, data).map_err(|e| Failure::io(&path, &e))
    };
    let mut log = Vec::new();
    write_jsonl(run.ledger.events(), &mut log).map_err(|e| Failure::io(Path::new("events.jsonl"), &e))?;
    write("events.jsonl", &log)?;
    write("series.csv", run.series.to_csv().as_bytes())?;
    write("report.json", format!("{}\n", report.to_json()).as_bytes())?;
    write("digest.txt", format!("{digest}\n").as_bytes())?;

    let summary = json!({ "digest": digest.to_string(), "events": run.ledger.events().len() });
    emit(out, &format!("{summary}\n"))
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    finish(verify_inner(args, out), err)
}

fn verify_inner(args: &VerifyArgs, out: &mut dyn Write) -> Outcome {
    let pf = load_price_function(args.config.as_deref())?;
    let bytes = read_file(&args.log)?;
    let events = read_jsonl(&bytes[..])?;
    let ledger = replay(&events, &pf)?;
    ledger.check_invariants()?;
    let mut times = vec![ledger.last_time().unwrap_or(pf.start())];
    if pf.end() > times[0] {
        times.push(pf.end());
    }
    for t_m in times {
        check_report(&ledger, &valuation_report(&ledger, t_m)?)?;
    }
    let summary = json!({
        "status": "ok",
        "events": events.len(),
        "digest": ledger.state_digest().to_string(),
    });
    emit(out, &format!("{summary}\n"))
}
