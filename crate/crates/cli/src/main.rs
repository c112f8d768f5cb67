//! `ddchirp` binary: thin wrapper over the library-level runner so
//! integration tests can drive the same code path in-process.

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ddchirp_cli::cli::run(std::env::args_os()) as u8)
}
