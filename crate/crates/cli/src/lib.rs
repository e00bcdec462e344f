//! Command-line front end for the `metric-scale` library: a seeded verification
//! suite, a scale table, and small optimization and geodesic demos.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

use std::io::Write;

pub use commands::{cmd_verify, run, RunOutput};
pub use config::{parse_vector, Command, Format, RunConfig};
pub use error::CliError;
pub use report::VerificationReport;

/// Runs one command and writes its output; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::parse_from(args) {
        Ok(c) => c,
        Err(CliError::Args(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("metric-scale: {e}");
            return e.exit_code();
        }
    };
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("metric-scale: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&cfg, &output) {
        eprintln!("metric-scale: {e}");
        return e.exit_code();
    }
    for line in &output.notes {
        eprintln!("{line}");
    }
    output.exit_code
}

fn emit(cfg: &RunConfig, output: &RunOutput) -> Result<(), CliError> {
    match cfg.output_path() {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, &output.body)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(output.body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
