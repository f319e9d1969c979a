use clap::Parser;

fn main() {
    let args = gpspectra_cli::Args::parse();
    std::process::exit(gpspectra_cli::run(&args));
}
