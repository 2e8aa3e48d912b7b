//! Batch frontend for the graph pipeline. Commands compose through
//! files: preprocess writes graph JSON per complex, segment adds the
//! superpixel block, train/predict/evaluate move checkpoints and CSVs.
//!
//! Exit codes: 0 success, 1 usage, 2 bad data, 3 internal. Failures
//! print one JSON line on stderr so batch drivers can parse them.

mod commands;
mod pipeline;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::{Cli, CliError};

fn main() {
    // Die quietly when the read end of a pipe closes, like any pipeline
    // filter; the default Rust disposition turns EPIPE into a panic.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not failures.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            fail(1, "usage", &e.to_string());
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            fail(1, "usage", "--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once, before any use");
    }
    let outcome = std::panic::catch_unwind(move || commands::run(cli));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(CliError::Usage(msg))) => fail(1, "usage", &msg),
        Ok(Err(CliError::Data(msg))) => fail(2, "data", &msg),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            fail(3, "internal", msg);
        }
    }
}

fn fail(code: i32, kind: &str, message: &str) -> ! {
    let line = serde_json::json!({ "kind": kind, "error": message });
    eprintln!("{line}");
    std::process::exit(code);
}
