//! `odeq`: invariants and equivalence tests for `y''^2 + A y'' + B = 0`.
//!
//! Exit codes: 0 success or equivalent, 1 a negative answer (not
//! equivalent, integrals or closed form refuted), 2 inconclusive or
//! non-generic, 3 input error.

mod commands;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{parse_box, parse_point, CliError, QuadInput, Settings};
use report::{Exit, Outcome, Report};

#[derive(Parser, Debug)]
#[command(name = "odeq", version, about = "Point and contact equivalence of second-order ODEs via differential invariants")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Zero-test trials.
    #[arg(long, global = true, default_value_t = 50)]
    trials: usize,
    /// Zero-test tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Sampling box, e.g. "x:-1..1,y:-1..1,p:0.5..2".
    #[arg(long = "box", global = true)]
    sample_box: Option<String>,
    /// Include wall time in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sign of the discriminant A^2 - 4B on the box.
    Classify {
        #[arg(short = 'A', long = "A", allow_hyphen_values = true)]
        a: String,
        #[arg(short = 'B', long = "B", allow_hyphen_values = true)]
        b: String,
    },
    /// Relative invariants I and H of y'' = f, optionally the barred ones at a point.
    Invariants {
        #[arg(allow_hyphen_values = true)]
        f: String,
        /// Point "x,y,p".
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        /// Barred invariants at --at (plain powers of I and H).
        #[arg(long, requires = "at")]
        barred: bool,
    },
    /// Associated equations of a quadratic equation from its integrals.
    Associated {
        #[command(flatten)]
        quad: Quad,
        /// Closed form of the first associated equation in a, b, c.
        #[arg(long, allow_hyphen_values = true)]
        ghat: Option<String>,
        /// Exchange the roles of (a, b) and (f, g).
        #[arg(long)]
        swap: bool,
    },
    /// Checks that u, v are independent integrals of d/dx + p d/dy + root d/dp.
    VerifyIntegrals {
        #[arg(long, allow_hyphen_values = true)]
        root: String,
        #[arg(allow_hyphen_values = true)]
        u: String,
        #[arg(allow_hyphen_values = true)]
        v: String,
    },
    /// Equivalence tests.
    #[command(subcommand)]
    Equiv(Equiv),
}

#[derive(Args, Debug)]
struct Quad {
    #[arg(short = 'A', long = "A", allow_hyphen_values = true)]
    a: String,
    #[arg(short = 'B', long = "B", allow_hyphen_values = true)]
    b: String,
    /// Integrals "a,b,f,g": (a, b) of the first root field, (f, g) of the second.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ints: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Equiv {
    /// Point equivalence of y'' = f1 and y'' = f2.
    Point {
        #[arg(allow_hyphen_values = true)]
        f1: String,
        #[arg(allow_hyphen_values = true)]
        f2: String,
        /// Box for the second equation (default: the --box of the first).
        #[arg(long)]
        box2: Option<String>,
    },
    /// Contact equivalence of two quadratic equations.
    Contact {
        #[arg(long, allow_hyphen_values = true)]
        a1: String,
        #[arg(long, allow_hyphen_values = true)]
        b1: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ints1: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        a2: String,
        #[arg(long, allow_hyphen_values = true)]
        b2: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ints2: Vec<String>,
        #[arg(long)]
        box2: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Invariants { .. } => "invariants",
            Command::Associated { .. } => "associated",
            Command::VerifyIntegrals { .. } => "verify-integrals",
            Command::Equiv(Equiv::Point { .. }) => "equiv point",
            Command::Equiv(Equiv::Contact { .. }) => "equiv contact",
        }
    }

    fn inputs(&self) -> serde_json::Value {
        match self {
            Command::Classify { a, b } => json!({ "A": a, "B": b }),
            Command::Invariants { f, at, barred } => json!({ "f": f, "at": at, "barred": barred }),
            Command::Associated { quad, ghat, swap } => json!({ "A": quad.a, "B": quad.b, "ints": quad.ints, "ghat": ghat, "swap": swap }),
            Command::VerifyIntegrals { root, u, v } => json!({ "root": root, "u": u, "v": v }),
            Command::Equiv(Equiv::Point { f1, f2, box2 }) => json!({ "f1": f1, "f2": f2, "box2": box2 }),
            Command::Equiv(Equiv::Contact { a1, b1, ints1, a2, b2, ints2, box2 }) => {
                json!({ "A1": a1, "B1": b1, "ints1": ints1, "A2": a2, "B2": b2, "ints2": ints2, "box2": box2 })
            }
        }
    }
}

fn run(cli: &Cli, report: &mut Report, s: &Settings) -> Result<Exit, CliError> {
    match &cli.command {
        Command::Classify { a, b } => commands::classify(report, a, b, s),
        Command::Invariants { f, at, barred } => {
            let at = at.as_deref().map(parse_point).transpose()?;
            commands::invariants(report, f, at, *barred, s)
        }
        Command::Associated { quad, ghat, swap } => commands::associated(report, &quad.a, &quad.b, &quad.ints, ghat.as_deref(), *swap, s),
        Command::VerifyIntegrals { root, u, v } => commands::verify(report, root, u, v, s),
        Command::Equiv(Equiv::Point { f1, f2, box2 }) => {
            let box2 = box2.as_deref().map(parse_box).transpose()?;
            commands::equiv_point(report, f1, f2, box2.as_ref(), s)
        }
        Command::Equiv(Equiv::Contact { a1, b1, ints1, a2, b2, ints2, box2 }) => {
            let box2 = box2.as_deref().map(parse_box).transpose()?;
            let first = QuadInput { a: a1, b: b1, ints: ints1 };
            let second = QuadInput { a: a2, b: b2, ints: ints2 };
            commands::equiv_contact(report, first, second, box2.as_ref(), s)
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let sample_box = match &cli.sample_box {
        Some(spec) => parse_box(spec)?,
        None => odeq::expr::SampleBox::default(),
    };
    let s = Settings { seed: cli.seed, trials: cli.trials, tol: cli.tol, sample_box };
    s.zero().validate()?;
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let settings = settings(&cli);
    let config = match &settings {
        Ok(s) => json!({ "seed": s.seed, "trials": s.trials, "tol": s.tol, "box": s.sample_box }),
        Err(_) => serde_json::Value::Null,
    };
    let mut report = Report::new(cli.command.name(), cli.command.inputs(), config);
    let exit = match settings.and_then(|s| run(&cli, &mut report, &s)) {
        Ok(exit) => exit,
        Err(e) => {
            report.result = Outcome { kind: "error", payload: json!({ "message": e.to_string() }) };
            if !cli.json {
                eprintln!("error: {e}");
            }
            e.exit()
        }
    };
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    if cli.json {
        println!("{}", report.json());
    } else if report.result.kind != "error" {
        print!("{}", report.text());
    }
    ExitCode::from(exit as u8)
}
