use clap::Parser;
use delaybandit_cli::{execute, Cli};

fn main() {
    if let Err(e) = execute(Cli::parse()) {
        eprintln!("delaybandit: {e}");
        std::process::exit(e.exit_code());
    }
}
