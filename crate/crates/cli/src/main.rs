use std::process::ExitCode;

use chinese_auction_cli::{exit, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(exit::INVALID as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::INVALID as u8);
        }
    }
    let outcome = run(&cli);
    if outcome.error {
        eprint!("{}", outcome.summary);
    } else {
        print!("{}", outcome.summary);
    }
    if let Some(path) = &cli.out {
        let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(exit::INVALID as u8);
        }
    }
    ExitCode::from(outcome.code as u8)
}
