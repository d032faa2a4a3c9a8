//! `gsr`: optimise, evaluate and compare energy-aware routing
//! configurations from Repetita files.

mod args;
mod commands;
mod config;
mod error;
mod report;

use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
            _ => {
                eprintln!("{}", error::error_json("usage", e.to_string().trim_end().to_string()));
                std::process::exit(2);
            }
        },
    };
    if let Err(e) = commands::run(cli.command) {
        eprintln!("{}", error::error_json(e.kind(), e.to_string()));
        std::process::exit(e.exit_code());
    }
}
