//! `twolevel` — CSV-emitting front end for the two-level dynamics library.
//!
//! Usage:
//!   twolevel <command> [--config <path>] [--out <path>] [--threads <n>] [--key=value ...]
//!
//! Commands: simulate, strobe, fit-gamma, rwa-scan, lyapunov, not-detect,
//! not-search. Exit codes: 0 success, 2 config error, 3 numeric/convergence
//! error, 4 I/O error.

mod config;
mod output;
mod run;

use std::path::PathBuf;

use config::{apply_override, build, parse_pairs, Command};
use run::CliError;

const USAGE: &str = "usage: twolevel <command> [--config <path>] [--out <path>] [--threads <n>] [--key=value ...]
commands: simulate | strobe | fit-gamma | rwa-scan | lyapunov | not-detect | not-search";

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    match run_cli(std::env::args().skip(1).collect()) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run_cli(args: Vec<String>) -> Result<String, CliError> {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        return Err(CliError::Config(USAGE.to_string()));
    }
    let command = Command::parse(&args[0]).map_err(|e| CliError::Config(format!("{e}\n{USAGE}")))?;

    let mut config_path: Option<PathBuf> = None;
    let mut out_path: Option<PathBuf> = None;
    let mut threads: usize = 1;
    let mut overrides: Vec<(String, String)> = Vec::new();

    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let take_value = |it: &mut std::slice::Iter<String>, flag: &str| -> Result<String, CliError> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Config(format!("flag {flag} needs a value")))
        };
        if arg == "--config" {
            config_path = Some(PathBuf::from(take_value(&mut it, "--config")?));
        } else if arg == "--out" {
            out_path = Some(PathBuf::from(take_value(&mut it, "--out")?));
        } else if arg == "--threads" {
            let v = take_value(&mut it, "--threads")?;
            threads = v
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| CliError::Config(format!("--threads needs a positive integer, got '{v}'")))?;
        } else if let Some(rest) = arg.strip_prefix("--") {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("unrecognized flag '{arg}'\n{USAGE}")))?;
            overrides.push((key.to_string(), value.to_string()));
        } else {
            return Err(CliError::Config(format!("unexpected argument '{arg}'\n{USAGE}")));
        }
    }

    let text = match &config_path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut pairs = parse_pairs(&text).map_err(|e| CliError::Config(e.to_string()))?;
    for (k, v) in &overrides {
        apply_override(&mut pairs, k, v);
    }
    let mut cfg = build(command, pairs).map_err(|e| CliError::Config(e.to_string()))?;
    if out_path.is_some() {
        cfg.out = out_path;
    }
    cfg.threads = threads;
    run::execute(&cfg)
}
