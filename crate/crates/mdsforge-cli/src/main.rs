use clap::Parser;
use mdsforge_cli::{resolve_threads, run, Cli, THREADS_ENV};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match resolve_threads(cli.threads, std::env::var(THREADS_ENV).ok().as_deref()) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    #[cfg(feature = "parallel")]
    if threads > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = report.to_json();
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
