//! `planar-dilation`: batch jobs over the planar-dilation toolkit.
//!
//! Exit codes: 0 completed, 1 malformed job or invalid input, 2 completed
//! with a negative verdict, 3 numerical-conditioning failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod job;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use job::{Job, SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Kernel,
    Pick,
    Contract,
    Dilate,
    Charfn,
    OpspaceExperiment,
    Factorize,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Pick => "pick",
            Command::Contract => "contract",
            Command::Dilate => "dilate",
            Command::Charfn => "charfn",
            Command::OpspaceExperiment => "opspace-experiment",
            Command::Factorize => "factorize",
        }
    }
}

/// Runs one JSON job and writes a JSON report.
#[derive(Debug, Parser)]
#[command(name = "planar-dilation", version)]
struct Cli {
    command: Command,
    /// Job file; stdin when absent.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the command's CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads for the data-parallel scans.
    #[arg(long)]
    threads: Option<usize>,
    /// Replaces every seed in the job.
    #[arg(long)]
    seed_override: Option<u64>,
}

enum Failure {
    Malformed(String),
    Numerical(String),
}

fn parse_job(text: &str, command: Command) -> Result<Job, Failure> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Failure::Malformed(format!("invalid JSON: {e}")))?;
    let obj = value.as_object_mut().ok_or_else(|| Failure::Malformed("at /: job must be an object".into()))?;
    match obj.remove("schema") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA) => {}
        Some(other) => return Err(Failure::Malformed(format!("at /schema: unsupported schema {other}, expected {SCHEMA}"))),
        None => return Err(Failure::Malformed("at /schema: missing field".into())),
    }
    match obj.remove("command") {
        Some(Value::String(c)) if c == command.name() => {}
        None => {}
        Some(other) => {
            return Err(Failure::Malformed(format!("at /command: job is for {other}, not \"{}\"", command.name())));
        }
    }
    Job::from_value(command.name(), value).map_err(Failure::Malformed)
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Malformed(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    let text = match &cli.job {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Malformed(format!("cannot read {}: {e}", p.display())))?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Malformed(format!("cannot read stdin: {e}")))?;
            s
        }
    };
    let mut job = parse_job(&text, cli.command)?;
    if let Some(seed) = cli.seed_override {
        job.override_seed(seed);
    }
    if let Some(n) = cli.threads {
        configure_threads(n)?;
    }
    let outcome = commands::run(&job).map_err(|e| {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Malformed(e.to_string())
        }
    })?;
    if cli.csv.is_some() && outcome.csv.is_none() {
        return Err(Failure::Malformed(format!("{} has no CSV output", job.name())));
    }
    let report = json!({
        "schema": SCHEMA,
        "command": job.name(),
        "parameters": outcome.parameters,
        "tolerances": outcome.tolerances,
        "negative": outcome.negative,
        "result": outcome.result,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    write_text(cli.out.as_ref(), &text)?;
    if let (Some(path), Some(csv)) = (&cli.csv, &outcome.csv) {
        write_text(Some(path), csv)?;
    }
    Ok(outcome.negative)
}

#[cfg(feature = "parallel")]
fn configure_threads(n: usize) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Malformed(format!("cannot configure {n} threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: usize) -> Result<(), Failure> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(Failure::Malformed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
