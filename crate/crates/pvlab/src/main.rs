use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = pvlab::cli::Cli::parse();
    std::process::exit(pvlab::cli::run(&cli));
}
