use clap::Parser;

fn main() {
    std::process::exit(frechet_cli::run(frechet_cli::Cli::parse()));
}
