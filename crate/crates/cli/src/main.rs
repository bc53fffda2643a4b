//! Entry point of the `latdiff` binary.

use clap::Parser;

fn main() {
    env_logger::init();
    let cli = latdiff_cli::Cli::parse();
    if let Err(err) = latdiff_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
