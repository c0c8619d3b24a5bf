use clap::Parser;

fn main() {
    let args = kgphase_cli::Args::parse();
    std::process::exit(kgphase_cli::main_with(&args));
}
