use std::process::ExitCode;

use clap::Parser;
use multidep_cli::{run, thread_count, Cli};

// Large distance matrices are allocated per replicate; mimalloc keeps the
// pages mapped between them.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(cli.threads).and_then(|threads| {
        if let Some(n) = threads {
            // Only fails if a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        run(&cli)
    });
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("multidep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
