mod args;
mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use commands::Globals;
use error::{CliResult, Failure};

fn clap_failure(e: clap::Error) -> Failure {
    let text = e.to_string();
    let first = text.lines().next().unwrap_or("invalid arguments");
    Failure::usage(first.trim_start_matches("error: "))
}

/// Parses argv, folding in `--config` entries for flags not given.
fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let root = Cli::command();
    let mentions_config = argv.iter().any(|a| a.to_string_lossy().starts_with("--config"));
    if !mentions_config {
        return Cli::from_arg_matches(&root.try_get_matches_from(&argv)?);
    }
    // Required flags may come from the file, so the first pass only
    // locates the subcommand and the config path.
    let matches = root.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let Some(path) = matches.get_one::<std::path::PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&root.try_get_matches_from(&argv)?);
    };
    let merged = (|| -> CliResult<Vec<OsString>> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::data(format!("cannot read config {}: {e}", path.display())))?;
        let entries = config::parse(&text, &path)?;
        let mut argv = argv.clone();
        argv.extend(config::injected_args(&root, &matches, &entries, &path)?);
        Ok(argv)
    })();
    match merged {
        Ok(argv) => Cli::from_arg_matches(&root.try_get_matches_from(argv)?),
        Err(f) => {
            report(&f);
            std::process::exit(f.exit_code());
        }
    }
}

fn report(f: &Failure) {
    eprintln!("humordet: {f}");
}

fn run(cli: Cli) -> CliResult<()> {
    let g = Globals {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::BuildDataset(a) => commands::build_dataset(a, &g),
        Command::Stats(a) => commands::stats(a, &g),
        Command::Encode(a) => commands::encode(a, &g),
        Command::Train(a) => commands::train(a, &g),
        Command::Eval(a) => commands::eval(a, &g),
        Command::Predict(a) => commands::predict(a, &g),
    }
}

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = clap_failure(e);
            report(&f);
            return ExitCode::from(f.exit_code() as u8);
        }
    };
    std::panic::set_hook(Box::new(|_| {}));
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            report(&f);
            ExitCode::from(f.exit_code() as u8)
        }
        Err(_) => {
            report(&Failure::internal("unexpected panic"));
            ExitCode::from(3)
        }
    }
}
