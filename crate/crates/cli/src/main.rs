use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mbsim::checks::{run_check, CHECK_NAMES};
use mbsim::config::RunConfig;
use mbsim::run::execute;
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "mbsim",
    version,
    about = "Packet-level simulator of data-center fan-in micro-bursts"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario (or a sweep) described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in acceptance check by name, `all`, or a check file.
    Check {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// `check = "law1"` plus an optional seed.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckFile {
    check: String,
    seed: Option<u64>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, out, seed } => cmd_run(&config, out, seed),
        Cmd::Check { target, seed } => cmd_check(&target, seed),
    }
}

fn cmd_run(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match execute(&cfg, &out) {
        Ok(dirs) => {
            for d in dirs {
                println!("wrote {}", d.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_FAIL
            })
        }
    }
}

fn resolve_check(target: &str) -> Result<(Vec<String>, Option<u64>), String> {
    if target == "all" {
        return Ok((CHECK_NAMES.iter().map(|s| s.to_string()).collect(), None));
    }
    if CHECK_NAMES.contains(&target) {
        return Ok((vec![target.to_string()], None));
    }
    let path = Path::new(target);
    if !path.is_file() {
        return Err(format!(
            "unknown check `{target}`; expected one of: all, {}",
            CHECK_NAMES.join(", ")
        ));
    }
    let text = std::fs::read_to_string(path).map_err(|e| format!("{target}: {e}"))?;
    let file: CheckFile = toml::from_str(&text).map_err(|e| format!("{target}: {e}"))?;
    if !CHECK_NAMES.contains(&file.check.as_str()) {
        return Err(format!(
            "{target}: invalid value for `check`: unknown check `{}`",
            file.check
        ));
    }
    Ok((vec![file.check], file.seed))
}

fn cmd_check(target: &str, seed: Option<u64>) -> ExitCode {
    let (names, file_seed) = match resolve_check(target) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let seed = seed.or(file_seed).unwrap_or(1);
    let mut all_pass = true;
    for name in names {
        match run_check(&name, seed).expect("name was validated") {
            Ok(outcome) => {
                all_pass &= outcome.pass;
                println!("{outcome}");
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                return ExitCode::from(EXIT_FAIL);
            }
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
