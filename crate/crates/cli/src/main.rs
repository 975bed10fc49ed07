use clap::Parser;

fn main() {
    let cli = hencky_cli::Cli::parse();
    std::process::exit(hencky_cli::run(&cli));
}
