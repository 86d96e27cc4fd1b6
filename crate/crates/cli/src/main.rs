mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("ftchain: {e}");
            return exit_for(&e);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("ftchain: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("ftchain: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let ctx = commands::Ctx {
        verbose: cli.verbose,
    };
    match commands::run(&cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ftchain: {e}");
            exit_for(&e)
        }
    }
}

fn exit_for(e: &ftchain_core::Error) -> ExitCode {
    if e.is_argument_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}
