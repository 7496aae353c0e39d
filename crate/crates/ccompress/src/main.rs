use clap::Parser;

fn main() {
    let cli = ccompress::cli::Cli::parse();
    std::process::exit(ccompress::commands::run(&cli));
}
