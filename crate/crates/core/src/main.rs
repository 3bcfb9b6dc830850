use clap::Parser;

fn main() {
    let cli = rankone::cli::Cli::parse();
    if let Err(e) = rankone::cli::run(cli) {
        if let rankone::Error::Io(io) = &e {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
