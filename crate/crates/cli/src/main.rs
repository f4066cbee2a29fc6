//! `qpragma` command-line driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use qpragma::diag::Diagnostic;
use qpragma::elaborator::{check_source, Elaborated};
use qpragma::node::{dump_trace, run, RunConfig, RunResult};

const SEED_VAR: &str = "QPRAGMA_SEED";

#[derive(Parser)]
#[command(name = "qpragma", version, about = "Check, inspect and run hybrid quantum programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program and report request statistics and outcomes.
    Run(RunArgs),
    /// Report diagnostics only.
    Check {
        input: PathBuf,
    },
    /// Print the request stream of one execution.
    DumpIr(IrArgs),
}

#[derive(Args)]
struct RunArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u64).range(1..=40))]
    max_qubits: u64,
    /// Fail when an unmeasured register is not returned to |0…0⟩.
    #[arg(long)]
    check_uncompute: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print the state captured at the end of `main` (or by `snapshot()`).
    #[arg(long)]
    dump_state: bool,
}

#[derive(Args)]
struct IrArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u64).range(1..=40))]
    max_qubits: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    Usage(String),
    Diagnostics(String),
}

fn usage(message: String) -> Failure {
    let mut cmd = Cli::command();
    Failure::Usage(cmd.error(ErrorKind::ValueValidation, message).render().to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn render(diags: &[Diagnostic], file: &str) -> String {
    diags.iter().map(|d| d.render(file) + "\n").collect()
}

fn elaborate(path: &Path) -> Result<(Elaborated, String), Failure> {
    let src = read(path)?;
    let file = path.display().to_string();
    match check_source(&src) {
        Ok(elab) => {
            let warnings = render(&elab.diagnostics, &file);
            Ok((elab, warnings))
        }
        Err(diags) => Err(Failure::Diagnostics(render(&diags, &file))),
    }
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_VAR} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn execute(path: &Path, config: &RunConfig) -> Result<(RunResult, String), Failure> {
    let (elab, warnings) = elaborate(path)?;
    let file = path.display().to_string();
    let result = run(&elab, config)
        .map_err(|e| Failure::Diagnostics(e.to_diagnostic().render(&file) + "\n"))?;
    Ok((result, warnings))
}

fn text_report(r: &RunResult, dump_state: bool) -> String {
    let mut out = String::new();
    for line in r.shots.first().map(|s| s.prints.as_slice()).unwrap_or_default() {
        let _ = writeln!(out, "{line}");
    }
    let s = &r.stats;
    let _ = writeln!(out, "requests: {}", s.requests);
    let _ = writeln!(out, "remote_reads: {}", s.remote_reads);
    let _ = writeln!(out, "remote_writes: {}", s.remote_writes);
    let _ = writeln!(out, "transfers: {}", s.transfers);
    let _ = writeln!(out, "gates: {}", s.gates);
    let _ = writeln!(out, "histogram:");
    for (k, n) in &r.histogram {
        let key = if k.is_empty() { "(none)" } else { k };
        let _ = writeln!(out, "  {key}: {n}");
    }
    if dump_state {
        if let Some(state) = &r.state {
            let _ = writeln!(out, "state:");
            out.push_str(&state.render());
        }
    }
    out
}

fn dispatch(cli: Cli) -> Result<(String, String), Failure> {
    match cli.command {
        Command::Check { input } => {
            let (_, warnings) = elaborate(&input)?;
            Ok((String::new(), warnings))
        }
        Command::Run(a) => {
            let config = RunConfig {
                shots: a.shots,
                seed: seed(a.seed)?,
                max_qubits: a.max_qubits as usize,
                check_uncompute: a.check_uncompute,
                trace: false,
            };
            let (r, warnings) = execute(&a.input, &config)?;
            let out = match a.format {
                Format::Json => r.to_json() + "\n",
                Format::Text => text_report(&r, a.dump_state),
            };
            Ok((out, warnings))
        }
        Command::DumpIr(a) => {
            let config = RunConfig {
                seed: seed(a.seed)?,
                max_qubits: a.max_qubits as usize,
                trace: true,
                ..RunConfig::default()
            };
            let (r, warnings) = execute(&a.input, &config)?;
            Ok((dump_trace(r.trace.as_deref().unwrap_or_default()), warnings))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok((out, warnings)) => {
            eprint!("{warnings}");
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Diagnostics(text)) => {
            eprint!("{text}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(text)) => {
            eprint!("{text}");
            ExitCode::from(2)
        }
    }
}
