use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ssdpp::Error> for Failure {
    fn from(e: ssdpp::Error) -> Self {
        use ssdpp::Error::*;
        match e {
            Config(_) => Failure::Usage(e.to_string()),
            Data(_) | Model(_) | Csv(_) | Json(_) | Io(_) => Failure::Data(e.to_string()),
            Encoding(_) => Failure::Internal(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ssdpp::Error>() {
            Ok(core) => core.into(),
            Err(other) => Failure::Internal(format!("{other:#}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Mine(a) => commands::mine(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
