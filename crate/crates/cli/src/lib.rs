//! Command-line front end for the `nvrepeater` models.
//!
//! Every output starts with `# config: {...}`, the fully resolved
//! configuration, so any CSV can be passed back through `--config` to
//! reproduce it.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod table;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;
pub use config::RunConfig;
pub use error::CliError;

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
