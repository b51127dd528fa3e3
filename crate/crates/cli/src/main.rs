use clap::Parser;

fn main() {
    let cli = mma_cli::Cli::parse();
    match mma_cli::execute(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
