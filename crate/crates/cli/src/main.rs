use clap::Parser;
use latentshift_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = latentshift_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
