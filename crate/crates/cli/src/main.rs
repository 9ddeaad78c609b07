use clap::Parser;

fn main() {
    let cli = edgereg_cli::Cli::parse();
    if let Err(e) = edgereg_cli::run(cli) {
        eprintln!("edgereg: {e}");
        std::process::exit(e.exit_code());
    }
}
