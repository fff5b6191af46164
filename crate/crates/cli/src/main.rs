// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Denoise(a) => commands::denoise(a),
        Command::Enhance(a) => commands::enhance(a),
        Command::Noise(a) => commands::noise(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad configuration, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    use kernel_tv::Error;
    let config = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(Error::Config(_) | Error::Kernel(_) | Error::CoupleMismatch(_))
        )
    });
    if config {
        2
    } else {
        1
    }
}
