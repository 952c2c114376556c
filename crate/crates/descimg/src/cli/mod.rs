//! The `descimg` command line.
//!
//! Exit codes: 0 on success, 1 when the pipeline reports an error, 2 on
//! invalid invocations (unknown flags, bad values, broken config files).

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Once;

use clap::Parser;

pub use args::Cli;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

static CANCEL: AtomicBool = AtomicBool::new(false);

/// Set by Ctrl-C. Long batches stop starting new work and leave completed
/// outputs in place, so a rerun resumes.
pub fn cancel_flag() -> &'static AtomicBool {
    &CANCEL
}

fn install_handlers(level: tracing::Level) {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Err(e) = ctrlc::set_handler(|| CANCEL.store(true, Ordering::SeqCst)) {
            eprintln!("warning: cannot install Ctrl-C handler: {e}");
        }
        let _ = tracing_subscriber::fmt()
            .with_max_level(level)
            .with_writer(std::io::stderr)
            .with_target(true)
            .try_init();
    });
}

/// Usage problems found after argument parsing.
#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<descimg_core::CoreError> for Failure {
    fn from(e: descimg_core::CoreError) -> Self {
        Failure::Domain(e.into())
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::apply(argv) {
        Ok(a) => a,
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    install_handlers(cli.log_level);
    match commands::execute(cli.command, &CANCEL) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
