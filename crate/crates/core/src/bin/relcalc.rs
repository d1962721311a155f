//! `relcalc`: run scenario files, fuzz the invariant batteries, and replay
//! the bundled demos.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relcalc::scenario::{self, FuzzOptions, Suite};

#[derive(Parser)]
#[command(
    name = "relcalc",
    version,
    about = "Finite-dimensional linear relation calculus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file.
    Run {
        file: PathBuf,
        /// Write the full JSON report to this path.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Assertion tolerance for tasks that set none.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Randomized invariant checks.
    Fuzz {
        /// Inclusive dimension range, e.g. 2..5.
        #[arg(long, default_value = "1..4", value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// all, relation, domination, limits or appendix.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Write the JSON report to this path, or to stdout when no path is
        /// given.
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json_out: Option<PathBuf>,
        /// Worker threads (0 = available parallelism).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run a bundled demo scenario.
    Demo {
        /// scaling-up, scaling-down, truncation, pipeline or example-3-4.
        name: String,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn write_json(path: &PathBuf, json: &str) -> Result<(), String> {
    if path.as_os_str() == "-" {
        println!("{json}");
        return Ok(());
    }
    std::fs::write(path, format!("{json}\n"))
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return code(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            file,
            json_out,
            eps,
        } => match scenario::run_scenario(&file, eps) {
            Err(e) => {
                eprintln!("error: {e}");
                code(2)
            }
            Ok(report) => {
                print!("{}", report.render_text());
                if let Some(path) = json_out {
                    if let Err(e) = write_json(&path, &report.to_json()) {
                        eprintln!("error: {e}");
                        return code(2);
                    }
                }
                code(report.exit_code)
            }
        },
        Command::Fuzz {
            dims,
            trials,
            seed,
            suite,
            json_out,
            threads,
        } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(2);
                }
            };
            let report = scenario::fuzz(&FuzzOptions {
                dims,
                trials,
                seed,
                suite,
                threads,
            });
            match &json_out {
                Some(p) if p.as_os_str() == "-" => println!("{}", report.to_json()),
                Some(p) => {
                    print!("{}", report.render_text());
                    if let Err(e) = write_json(p, &report.to_json()) {
                        eprintln!("error: {e}");
                        return code(2);
                    }
                }
                None => print!("{}", report.render_text()),
            }
            code(report.exit_code())
        }
        Command::Demo { name } => match scenario::demo(&name) {
            Err(e) => {
                eprintln!("error: {e}");
                code(2)
            }
            Ok((report, text)) => {
                print!("{text}");
                code(report.exit_code)
            }
        },
    }
}
