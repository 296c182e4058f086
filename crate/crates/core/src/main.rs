use clap::Parser;

fn main() {
    let cli = qdent::cli::Cli::parse();
    if let Err(e) = qdent::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
