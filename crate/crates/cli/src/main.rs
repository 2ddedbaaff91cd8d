use clap::Parser;

fn main() {
    let cli = robustfolio_cli::Cli::parse();
    std::process::exit(robustfolio_cli::run(&cli));
}
