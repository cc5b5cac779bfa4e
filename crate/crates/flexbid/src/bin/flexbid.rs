use clap::Parser;
use flexbid::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        let code = e.exit_code();
        eprintln!("ERROR {code}: {e}");
        std::process::exit(code);
    }
}
