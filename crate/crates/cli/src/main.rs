use clap::Parser;

fn main() {
    nvw_cli::init_threads();
    let cli = nvw_cli::Cli::parse();
    std::process::exit(nvw_cli::run(cli));
}
