//! The `onionbind` command line. [`dispatch`] is the whole program; the
//! binary only forwards process arguments and standard streams to it.

mod args;
mod cmd;
pub mod demo;
pub mod exit;
mod settings;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Format;

/// Result of one in-process invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub(crate) struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { code: exit::FAILURE, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }
}

macro_rules! cli_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.to_string())
            }
        }
    )*};
}

cli_error_from!(
    std::io::Error,
    onionbind::onionid::IdentityError,
    onionbind::trust::TrustError,
    onionbind::notary::NotaryError,
    onionbind::descriptor::DescriptorError
);

pub(crate) type CmdResult = Result<i32, CliError>;

/// Runs the command line `argv` (including the program name), writing to
/// `out` and `err`, and returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    exit::OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    exit::USAGE
                }
            };
        }
    };
    let result = settings::Settings::resolve(&cli).and_then(|s| cmd::run(&cli.command, &s, out, err));
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "onionbind: {}", e.message);
            e.code
        }
    }
}

/// [`dispatch`] with captured output.
pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let exit_code = dispatch(argv, &mut out, &mut err);
    CommandOutcome {
        exit_code,
        stdout: String::from_utf8_lossy(&out).into_owned(),
        stderr: String::from_utf8_lossy(&err).into_owned(),
    }
}
