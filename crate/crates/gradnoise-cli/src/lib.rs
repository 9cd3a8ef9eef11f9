//! Command-line front end over the `gradnoise` library: parse a problem
//! description, dispatch to the analysis modules, and emit human tables or
//! machine-readable CSV/JSON.
//!
//! Exit codes: 0 success, 2 validation error (bad flags, bad config file,
//! inadmissible parameters), 3 instability (parameters outside the stability
//! region, diverging robustness), 4 numerical failure. Errors are reported as
//! one JSON object on stderr so scripts can dispatch on `error.code`.

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod commands;
pub mod report;

/// Errors surfaced by the CLI layer: library failures plus usage and IO
/// problems of the front end itself.
#[derive(Debug)]
pub enum CmdError {
    Lib(gradnoise::Error),
    Usage(String),
    Io { path: String, message: String },
}

impl From<gradnoise::Error> for CmdError {
    fn from(e: gradnoise::Error) -> Self {
        CmdError::Lib(e)
    }
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        CmdError::Usage(message.into())
    }

    pub fn io(path: impl Into<String>, err: &std::io::Error) -> Self {
        CmdError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// Stable machine-readable code, mirroring `gradnoise::Error::code`.
    pub fn code(&self) -> &'static str {
        match self {
            CmdError::Lib(e) => e.code(),
            CmdError::Usage(_) => "USAGE",
            CmdError::Io { .. } => "IO",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CmdError::Lib(e) => e.to_string(),
            CmdError::Usage(m) => m.clone(),
            CmdError::Io { path, message } => format!("{path}: {message}"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use gradnoise::Error::*;
        match self {
            CmdError::Usage(_) | CmdError::Io { .. } => 2,
            CmdError::Lib(e) => match e {
                InvalidArgument { .. }
                | OutOfRange { .. }
                | EpsOutOfRange { .. }
                | KappaOne
                | EmptyGrid
                | DegreeZero
                | ExactPathUnsupported { .. }
                | Unsupported { .. }
                | PNotPsd { .. }
                | InfeasibleCert { .. }
                | Infeasible { .. } => 2,
                Unstable { .. } | NotStable { .. } | Divergent { .. } => 3,
                Singular { .. }
                | NoConvergence { .. }
                | NoInteriorCandidate
                | NumericalFailure { .. }
                | NonFinite { .. } => 4,
            },
        }
    }

    /// The stderr payload: `{"error":{"code":...,"message":...}}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code(), "message": self.message() }
        })
        .to_string()
    }
}

/// Parses `std::env::args`, runs the requested command, writes its output,
/// and returns the process exit code.
pub fn run() -> i32 {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            // Clap renders help to stdout and errors to stderr on its own.
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli) {
        Ok(outcome) => {
            for (path, contents) in &outcome.files {
                if let Err(e) = std::fs::write(path, contents) {
                    let err = CmdError::io(path.clone(), &e);
                    eprintln!("{}", err.to_json());
                    return err.exit_code();
                }
            }
            if let Some(text) = &outcome.stdout {
                print!("{text}");
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
