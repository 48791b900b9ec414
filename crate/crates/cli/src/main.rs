use clap::Parser;

fn main() {
    let cli = lexnet_cli::Cli::parse();
    std::process::exit(lexnet_cli::execute(cli));
}
