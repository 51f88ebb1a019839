use clap::Parser;

use asymcopula_cli::{commands, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli.command) {
        eprintln!("asymcopula: {e}");
        std::process::exit(e.exit_code());
    }
}
