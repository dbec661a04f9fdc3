use clap::Parser;

fn main() {
    std::process::exit(cfevrp::cli::run(cfevrp::cli::Cli::parse()));
}
