//! The `kslab` command line.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 when a
//! run, study or check fails.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{load_config, RunConfig};
use super::convergence::{convergence_study, ConvergenceKind};
use super::output::simulate;
use super::sweep::{run_sweep, SweepPlan};
use crate::inequalities::{run_suite, Check, SuiteOptions};
use crate::stepper::Outcome;
use crate::Error;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kslab", version, about = "Keller-Segel finite-volume laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep plan.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Run the inequality suite and print its JSON report.
    Verify {
        /// Restrict to one check; repeatable. Defaults to all of them.
        #[arg(long = "lemma", value_parser = parse_check)]
        lemmas: Vec<Check>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Fields per ensemble.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Cells per side of the coarse grid.
        #[arg(long, default_value_t = 32)]
        cells: usize,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid or time-step refinement study and print the table as CSV.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Spatial)]
        kind: Kind,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// `dt = factor h^2` (spatial) or `dt = factor / 2^level` (temporal).
        #[arg(long)]
        factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and its coefficients without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Spatial,
    Temporal,
}

fn parse_check(s: &str) -> std::result::Result<Check, String> {
    match s {
        "gn" | "gagliardo-nirenberg" | "3.2" => Ok(Check::GagliardoNirenberg),
        "eta" | "eta-interpolation" | "3.3" => Ok(Check::EtaInterpolation),
        "truncation" | "3.4" => Ok(Check::Truncation),
        "sequence" | "3.6" => Ok(Check::Sequence),
        "log-domination" => Ok(Check::LogDomination),
        other => Err(format!(
            "unknown check `{other}`; expected gn, eta, truncation, sequence, log-domination or 3.2, 3.3, 3.4, 3.6"
        )),
    }
}

/// Configuration problems are the caller's fault; everything else is a failed run.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig { .. } | Error::Parse { .. } | Error::InvalidCoefficient { .. } => EXIT_USAGE,
        Error::Io { .. } => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn report(e: Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(&e)
}

fn write_file(path: &Path, text: &str) -> crate::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first) and executes the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => report(e),
    }
}

fn execute(command: Command) -> crate::Result<i32> {
    match command {
        Command::Simulate { config, out } => {
            let mut resolved = load_config(&config)?;
            if out.is_some() {
                resolved.config.output.dir = out;
            }
            for w in &resolved.warnings {
                eprintln!("warning: {w}");
            }
            let res = simulate(&resolved)?;
            println!(
                "{}: t = {}, steps = {}, sup u = {:e}",
                res.outcome.label(),
                res.summary.final_t,
                res.summary.steps,
                res.summary.sup_u
            );
            if let Some(dir) = resolved.config.output.resolve_dir() {
                println!("output in {}", dir.display());
            }
            Ok(match res.outcome {
                Outcome::Stalled { message, .. } => {
                    eprintln!("run stalled: {message}");
                    EXIT_FAILED
                }
                _ => EXIT_OK,
            })
        }
        Command::Sweep {
            plan,
            out,
            parallelism,
        } => {
            let text = std::fs::read_to_string(&plan).map_err(|e| Error::io(&plan, e))?;
            let mut plan = SweepPlan::from_json(&text)?;
            if out.is_some() {
                plan.output_dir = out;
            }
            if let Some(p) = parallelism {
                plan.parallelism = p;
            }
            let table = run_sweep(&plan)?;
            print!("{}", table.to_csv());
            let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} runs failed", table.rows.len());
                return Ok(EXIT_FAILED);
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            lemmas,
            trials,
            seed,
            count,
            cells,
            out,
        } => {
            let opts = SuiteOptions {
                checks: if lemmas.is_empty() { Check::ALL.to_vec() } else { lemmas },
                count,
                trials,
                seed,
                cells,
            };
            let suite = run_suite(&opts)?;
            let json = suite.to_json();
            println!("{json}");
            if let Some(path) = out {
                write_file(&path, &json)?;
            }
            for r in suite.failures() {
                eprintln!("FAILED {} on {}", r.lemma, r.ensemble);
            }
            Ok(if suite.passed { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Converge {
            config,
            kind,
            levels,
            factor,
            out,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
            let cfg = RunConfig::from_json(&text)?;
            let kind = match kind {
                Kind::Spatial => ConvergenceKind::Spatial,
                Kind::Temporal => ConvergenceKind::Temporal,
            };
            let table = convergence_study(&cfg, kind, levels, factor, None)?;
            let csv = table.to_csv();
            print!("{csv}");
            if let Some(path) = out {
                write_file(&path, &csv)?;
            }
            Ok(EXIT_OK)
        }
        Command::Validate { config } => {
            let resolved = load_config(&config)?;
            for w in &resolved.warnings {
                eprintln!("warning: {w}");
            }
            println!("ok: {:?} regime on {} cells", resolved.regime, resolved.grid.len());
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("kslab").chain(list.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run(args(&["simulate", "--bogus"])), EXIT_USAGE);
        assert_eq!(run(args(&["frobnicate"])), EXIT_USAGE);
        assert_eq!(run(args(&["verify", "--lemma", "9.9"])), EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(args(&["--help"])), EXIT_OK);
    }

    #[test]
    fn check_aliases() {
        assert_eq!(parse_check("3.6").unwrap(), Check::Sequence);
        assert_eq!(parse_check("gn").unwrap(), Check::GagliardoNirenberg);
    }

    #[test]
    fn verify_sequence_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        let out_s = out.to_str().unwrap();
        let code = run(args(&["verify", "--lemma", "3.6", "--trials", "200", "--seed", "7", "--out", out_s]));
        assert_eq!(code, EXIT_OK);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(json["passed"], true);
    }

    #[test]
    fn negative_mu_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{
                "model": {
                    "diffusion": {"family": "constant", "value": 1.0},
                    "sensitivity": {"family": "constant", "value": 1.0},
                    "source": {"r": 0.0, "mu": -1.0, "p": 0.5}
                },
                "grid": {"geometry": "rectangle", "lx": 1.0, "ly": 1.0, "nx": 8, "ny": 8},
                "t_end": 1.0
            }"#,
        )
        .unwrap();
        assert_eq!(run(args(&["validate", "--config", path.to_str().unwrap()])), EXIT_USAGE);
    }

    #[test]
    fn simulate_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut cfg = RunConfig::new(
            crate::model::ModelSpec::classical(),
            crate::grid::Geometry::unit_square(8),
            0.05,
        );
        cfg.output.dir = Some(dir.path().join("out"));
        std::fs::write(&path, cfg.to_json()).unwrap();
        assert_eq!(run(args(&["simulate", "--config", path.to_str().unwrap()])), EXIT_OK);
        assert!(dir.path().join("out/series.csv").exists());
        assert!(dir.path().join("out/summary.json").exists());
    }
}
