//! Command-line front end for the `consilience` library.
//!
//! [`run`] parses arguments and dispatches to a subcommand, returning the
//! process exit code: 0 success, 2 parse/input error, 3 degenerate data,
//! 4 usage error.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = out.write_all(rendered.as_bytes());
                return EXIT_OK;
            }
            let _ = err.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => commands::analyze(a, out),
        Command::Null(a) => commands::null(a, out),
        Command::Enumerate(a) => commands::enumerate(a, out),
        Command::Critical(a) => commands::critical_cmd(a, out),
        Command::Compare(a) => commands::compare(a, out),
        Command::Plot(a) => commands::plot_cmd(a, out),
    }
}
