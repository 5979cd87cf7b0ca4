mod cli;
mod commands;
mod error;
mod output;
mod settings;
mod source;

use std::collections::BTreeSet;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use cli::Cli;
use error::CliError;
use settings::Settings;

/// Every option id of every subcommand, as accepted in config files.
fn known_keys() -> BTreeSet<String> {
    let cmd = Cli::command();
    let mut keys: BTreeSet<String> = cmd.get_arguments().map(|a| a.get_id().to_string()).collect();
    for sub in cmd.get_subcommands() {
        keys.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
    }
    keys.remove("config");
    keys.remove("help");
    keys.remove("version");
    keys
}

fn run() -> Result<(), CliError> {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => e.exit(),
            _ => return Err(CliError::new("usage", e.render().to_string().trim_end())),
        },
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::new("usage", e.to_string()))?;
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    let settings = Settings::load(cli.config.as_deref(), &[&matches, sub], &known_keys())?;
    commands::dispatch(&cli.command, &settings)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
