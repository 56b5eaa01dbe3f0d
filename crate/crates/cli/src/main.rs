mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command};
use clap::Parser;
use config::RunConfig;
use stablab::{Error, Result};
use std::io::Write;
use std::process::ExitCode;

/// Loads the config file (if any), applies flags, resolves defaults and runs.
fn execute(command: Command) -> Result<()> {
    let (mut cfg, verbatim) = match command.config_path() {
        Some(p) => {
            let (c, text) = RunConfig::load(p)?;
            (c, Some(text))
        }
        None => (RunConfig::default(), None),
    };
    if let Some(name) = command.name() {
        match cfg.command.as_deref() {
            Some(c) if c != name => {
                return Err(Error::Config(format!("config is for command '{c}', not '{name}'")));
            }
            _ => cfg.command = Some(name.to_string()),
        }
    }
    command.apply(&mut cfg)?;
    let verbatim = match verbatim {
        Some(t) => t,
        None => cfg.to_toml()?,
    };
    let cfg = cfg.resolve()?;
    let resolved = cfg.to_toml()?;
    let name = cfg.command.clone().unwrap_or_default();
    let seed = cfg.seed.unwrap_or_default();
    match commands::run(&cfg) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report.summary)?;
            if let Some(dir) = &cfg.output {
                report.write(dir, &name, seed, &verbatim, &resolved)?;
            }
            // a reader that stops early (`| head`) is not an error
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(e)),
                _ => Ok(()),
            }
        }
        Err(e) => {
            if let Some(dir) = &cfg.output {
                // best effort: the original error is what gets reported
                let _ = std::fs::create_dir_all(dir).and_then(|_| {
                    std::fs::write(dir.join("failure.json"), output::failure(&e, exit_code(&e)).to_string() + "\n")
                });
            }
            Err(e)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_budget_failure() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", output::failure(&e, code));
            ExitCode::from(code)
        }
    }
}
