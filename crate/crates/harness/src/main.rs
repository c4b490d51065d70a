use clap::Parser;

use spikebench_harness::cli::{execute, Cli};

fn main() {
    spikebench_harness::init_thread_pool();
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
