use clap::Parser;

use hwq_cli::cli::{emit, execute, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match execute(&cli).and_then(|o| emit(&o)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
