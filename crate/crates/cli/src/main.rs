use clap::Parser;

fn main() {
    let cli = tagauth_cli::Cli::parse();
    if let Err(e) = tagauth_cli::run(&cli) {
        eprintln!("tagauth: {e}");
        std::process::exit(e.exit_code());
    }
}
