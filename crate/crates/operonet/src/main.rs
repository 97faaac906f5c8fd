use clap::Parser;

use operonet::cli::{dispatch, init_threads, Cli};

fn main() {
    init_threads();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
