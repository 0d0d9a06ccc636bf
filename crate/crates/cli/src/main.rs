use clap::Parser;

fn main() {
    std::process::exit(r3bp_cli::run(r3bp_cli::Cli::parse()));
}
